"""Per-point report computation, content-hash cache and parameter sweeps."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .bound import TransportReport, assemble_bound, failed_report, interaction_range
from .config import RunConfig
from .errors import HydroboundError
from .hydro import (decoherence_time, diffusivity_direct, diffusivity_resolvent,
                    diffusivity_time_integral, expansion, microscopic_diffusivity)
from .ring import current_operator, estimate_A, lr_cone, reference_velocity

log = logging.getLogger(__name__)

MAX_BAND_TRUNCATION = 8
SOLVERS = {"resolvent": diffusivity_resolvent, "integral": diffusivity_time_integral,
           "direct": diffusivity_direct}

# number of compute_report calls in this process; the cache tests read it
solver_calls = 0


def diffusivities(ex, method: str) -> dict[str, float]:
    names = list(SOLVERS) if method == "all" else [method]
    return {m: SOLVERS[m](ex).D for m in names}


def _spread(values: dict[str, float]) -> float:
    v = list(values.values())
    ref = abs(v[0]) or 1.0
    return max(abs(x - v[0]) for x in v) / ref


def truncation_band(model, n: int) -> list[int]:
    return [m for m in (n - 1, n + 1) if 2 <= m <= MAX_BAND_TRUNCATION]


def resolve_v_lr(config: RunConfig, model) -> tuple[float, str]:
    """Explicit value, then the analytic reference, then the cone probe."""
    if config.v_lr is not None:
        return config.v_lr, "config"
    v = reference_velocity(model)
    if v is not None and v > 0:
        return v, "analytic"
    if v == 0:
        return 0.0, "analytic"
    cone = lr_cone(model, L=min(config.ring_sites, 10), v_ref=1.0)
    return cone.velocity, "cone (non-rigorous)"


def compute_report(config: RunConfig, param: float | None = None) -> TransportReport:
    global solver_calls
    solver_calls += 1
    model = config.model
    timings = {}

    t0 = time.perf_counter()
    ex = expansion(model)
    D_methods = diffusivities(ex, config.method)
    D = D_methods["resolvent" if "resolvent" in D_methods else config.method]
    band = [D]
    if config.band:
        for m in truncation_band(model, model.n):
            band.append(diffusivity_resolvent(model.with_(n=m)).D)
    timings["D"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tau, _ = decoherence_time(ex, kpoints=config.kpoints)
    timings["tau"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    D0 = microscopic_diffusivity(ex)
    _, vC = current_operator(model)
    xi = interaction_range(model)
    v_lr, source = resolve_v_lr(config, model)
    A = estimate_A(model, tau, L=config.ring_sites, v_ref=v_lr if source != "analytic" else None)
    timings["bound"] = time.perf_counter() - t0

    return assemble_bound(
        D, D0, vC, tau, A, config.a_prime, v_lr, xi,
        model=model.to_dict(), param=param, D_lo=min(band), D_hi=max(band),
        D_methods=D_methods, D_spread=_spread(D_methods),
        A_meta={"L": config.ring_sites, "samples": 200}, v_lr_source=source,
        loss=float(ex.generator.total_loss), unvalidated=not model.hermitian_jumps,
        timings=timings,
    )


# ------------------------------------------------------------------ cache

def cache_key(config: RunConfig, param: float | None = None) -> str:
    blob = json.dumps({"version": __version__, "config": config.fingerprint(), "param": param},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def cache_load(cache_dir: str | None, key: str) -> TransportReport | None:
    if not cache_dir:
        return None
    path = os.path.join(cache_dir, key + ".json")
    try:
        with open(path, encoding="utf-8") as fh:
            blob = json.load(fh)
    except (OSError, ValueError):
        return None
    if blob.get("version") != __version__:
        return None
    return TransportReport.from_dict(blob["report"])


def cache_store(cache_dir: str | None, key: str, report: TransportReport):
    """Write-then-rename so concurrent writers never leave a partial file."""
    if not cache_dir:
        return
    os.makedirs(cache_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump({"version": __version__, "report": report.to_dict()}, fh, sort_keys=True)
        os.replace(tmp, os.path.join(cache_dir, key + ".json"))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cached_report(config: RunConfig, param: float | None = None) -> TransportReport:
    key = cache_key(config, param)
    hit = cache_load(config.cache, key)
    if hit is not None:
        return hit
    report = compute_report(config, param)
    cache_store(config.cache, key, report)
    return report


# ------------------------------------------------------------------ sweeps

def run_point(config: RunConfig, value: float | None) -> TransportReport:
    """One sweep row; library errors become an ``error`` entry instead of propagating."""
    try:
        cfg = config.point(value) if value is not None else config
        return cached_report(cfg, value)
    except HydroboundError as exc:
        log.warning("sweep point %s failed: %s", value, exc)
        return failed_report(value, f"{type(exc).__name__}: {exc}", config.model.to_dict())


def run_sweep(config: RunConfig) -> list[TransportReport]:
    values = list(config.sweep.values) if config.sweep is not None else [None]
    if config.workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(run_point, [config] * len(values), values))
    return [run_point(config, v) for v in values]
