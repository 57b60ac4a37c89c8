"""Command-line entry point ``hydrobound``.

Exit codes: 0 success, 2 ballistic transport, 3 solver non-convergence,
4 configuration or input error, 1 any other library error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

from .bound import TransportReport, write_csv
from .config import METHODS, RunConfig, load_config, parse_config
from .errors import (BallisticTransport, ConeNotResolved, ConfigError, ConvergenceError,
                     DegenerateKernel, GapClosure, HorizonExceeded, HydroboundError,
                     InvalidBoundInput, ModeTrackingLost, RingTooLarge, ValidationError)
from .hydro import decoherence_time, dispersion_direct, expansion
from .ring import lr_cone
from .sweep import cached_report, diffusivities, run_sweep

EXIT_BALLISTIC, EXIT_CONVERGENCE, EXIT_CONFIG = 2, 3, 4
CONVERGENCE = (ConvergenceError, ModeTrackingLost, GapClosure, DegenerateKernel, ConeNotResolved)
INPUT = (ConfigError, ValidationError, InvalidBoundInput, RingTooLarge, HorizonExceeded)

DEFAULT_CONFIG = """
[model]
name = "xxz_dephasing"
delta = {delta!r}
c = {c!r}
"""


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--truncation", type=int, help="maximum string extent n")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--kpoints", type=int)
    common.add_argument("--ring-sites", type=int, dest="ring_sites")
    common.add_argument("--workers", type=int)
    common.add_argument("--cache", help="cache directory for sweep rows")
    common.add_argument("--delta", type=float, default=1.0,
                        help="XXZ anisotropy when no --config is given")
    common.add_argument("--c", type=float, default=1.0,
                        help="dephasing strength when no --config is given")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hydrobound", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("diffusivity", parents=[common], help="D from the selected method(s)")
    sub.add_parser("tau", parents=[common], help="decoherence time from the k-scan")
    d = sub.add_parser("dispersion", parents=[common], help="slow-mode dispersion Omega_k")
    d.add_argument("--k", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.4])
    sub.add_parser("bound", parents=[common], help="full bound report at one point")
    sub.add_parser("sweep", parents=[common], help="bound reports along the [sweep] axis")
    sub.add_parser("probe-cone", parents=[common], help="numerical light-cone velocity")
    return p


def resolve_config(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config(DEFAULT_CONFIG.format(delta=args.delta, c=args.c))
    changes = {}
    for key in ("method", "kpoints", "ring_sites", "workers", "cache", "out", "format"):
        val = getattr(args, key)
        if val is not None:
            changes[key] = val
    if args.truncation is not None:
        if args.truncation < 1:
            raise ConfigError(f"--truncation must be >= 1, got {args.truncation}")
        changes["model"] = cfg.model.with_(n=args.truncation)
    for key in ("kpoints", "ring_sites", "workers"):
        if key in changes and changes[key] < 1:
            raise ConfigError(f"--{key.replace('_', '-')} must be >= 1")
    return cfg.with_(**changes)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _reports(reports: list[TransportReport], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
    return write_csv(reports)


def run(args, cfg: RunConfig) -> str:
    fmt = cfg.format
    if args.command == "diffusivity":
        vals = diffusivities(expansion(cfg.model), cfg.method)
        return _table([{"method": m, "n": cfg.truncation, "D": v} for m, v in vals.items()], fmt)
    if args.command == "tau":
        tau, scan = decoherence_time(cfg.model, kpoints=cfg.kpoints)
        rows = [{"k": float(k), "E1_re": float(e.real), "E1_im": float(e.imag),
                 "slow_re": float(s.real)} for k, e, s in zip(scan.k, scan.E1, scan.slow)]
        if fmt == "json":
            return json.dumps({"tau": tau, "scan": rows}, indent=2, sort_keys=True) + "\n"
        return f"# tau = {tau!r}\n" + _table(rows, fmt)
    if args.command == "dispersion":
        pts = dispersion_direct(cfg.model, args.k)
        return _table([{"k": k, "omega_re": om.real, "omega_im": om.imag,
                        "D_k": (-om.imag / k ** 2 if k else float("nan"))} for k, om in pts], fmt)
    if args.command == "bound":
        return _reports([cached_report(cfg.with_(sweep=None))], fmt)
    if args.command == "sweep":
        if cfg.sweep is None:
            raise ConfigError("the sweep command needs a [sweep] table in the configuration")
        return _reports(run_sweep(cfg), fmt)
    if args.command == "probe-cone":
        cone = lr_cone(cfg.model, L=min(cfg.ring_sites, 10))
        rows = [{"site": int(x), "arrival": float(t)} for x, t in zip(cone.sites, cone.arrival)]
        if fmt == "json":
            return json.dumps({"velocity": cone.velocity, "non_rigorous": True, "arrival": rows},
                              indent=2, sort_keys=True) + "\n"
        return f"# velocity = {cone.velocity!r} (non-rigorous estimate)\n" + _table(rows, fmt)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        text = run(args, cfg)
    except BallisticTransport as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BALLISTIC
    except CONVERGENCE as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except INPUT as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HydroboundError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
