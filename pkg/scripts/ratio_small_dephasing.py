"""D / tau at delta = 0.5 for decreasing c and several truncations."""
import argparse
import time

from hydrobound import decoherence_time, diffusivity_resolvent, xxz_dephasing
from hydrobound.hydro import expansion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--cs", type=float, nargs="+", default=[2.0, 1.0, 0.5])
    ap.add_argument("--truncations", type=int, nargs="+", default=[5, 6, 7])
    ap.add_argument("--kpoints", type=int, default=64)
    args = ap.parse_args()
    print("n      c          D            tau          D/tau     seconds")
    for n in args.truncations:
        for c in args.cs:
            t0 = time.perf_counter()
            ex = expansion(xxz_dephasing(args.delta, c, n=n))
            D = diffusivity_resolvent(ex).D
            tau, _ = decoherence_time(ex, kpoints=args.kpoints)
            print(f"{n:<3d} {c:8.3f}  {D:.8f}  {tau:.8f}  {D / tau:8.4f}  {time.perf_counter() - t0:8.1f}")


if __name__ == "__main__":
    main()
