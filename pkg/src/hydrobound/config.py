"""Run configuration: TOML text with a ``[model]`` table and an optional ``[sweep]`` table.

Example::

    truncation = 7
    method = "resolvent"
    kpoints = 64

    [model]
    name = "xxz_dephasing"
    delta = 1.0
    c = 2.0

    [sweep]
    param = "c"
    start = 1.0
    stop = 8.0
    points = 8
    scale = "log"

Custom models give ``hamiltonian`` as a table ``{XX = 1.0, YY = 1.0}`` or a
list of ``{pattern, coef}`` tables, and ``jumps`` as a list of patterns or
``{pattern, coef}`` tables.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .generator import ModelSpec, Term, dephasing_only, xxz_dephasing

METHODS = ("resolvent", "integral", "direct", "all")
FORMATS = ("csv", "json")
MODEL_NAMES = ("xxz_dephasing", "dephasing", "custom")
TOP_KEYS = {"truncation", "method", "kpoints", "ring_sites", "a_prime", "v_lr",
            "cache", "out", "format", "workers", "band", "model", "sweep"}
MODEL_KEYS = {"name", "delta", "c", "charge", "hamiltonian", "jumps"}
SWEEP_KEYS = {"param", "start", "stop", "points", "scale", "values"}


@dataclass(frozen=True)
class SweepAxis:
    param: str
    values: tuple[float, ...]

    @classmethod
    def span(cls, param: str, start: float, stop: float, points: int, scale: str = "linear"):
        if scale == "log":
            vals = np.geomspace(start, stop, points)
        else:
            vals = np.linspace(start, stop, points)
        return cls(param, tuple(float(v) for v in vals))


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    method: str = "resolvent"
    kpoints: int = 64
    ring_sites: int = 8
    a_prime: float = 1.0
    v_lr: float | None = None
    band: bool = True
    sweep: SweepAxis | None = None
    out: str | None = None
    format: str = "csv"
    cache: str | None = None
    workers: int = 1

    @property
    def truncation(self) -> int:
        return self.model.n

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def point(self, value: float) -> "RunConfig":
        """Config with the sweep parameter set to ``value`` and no sweep."""
        if self.sweep is None:
            return self
        return replace(self, model=set_param(self.model, self.sweep.param, value), sweep=None)

    def fingerprint(self) -> dict:
        """Everything that determines the computed report."""
        return {"model": self.model.to_dict(), "method": self.method, "kpoints": self.kpoints,
                "ring_sites": self.ring_sites, "a_prime": self.a_prime, "v_lr": self.v_lr,
                "band": self.band}


def set_param(model: ModelSpec, name: str, value: float) -> ModelSpec:
    if name == "c":
        return model.with_(c=float(value))
    if name in ("n", "truncation"):
        return model.with_(n=int(value))
    params = dict(model.params)
    if name == "delta" and model.name == "xxz_dephasing":
        return xxz_dephasing(float(value), model.c, model.n).with_(charge=model.charge)
    raise ConfigError(f"sweep parameter {name!r} is not supported for model {model.name!r}"
                      f" (parameters: c, n{', ' + ', '.join(params) if params else ''})")


def _number(tbl: dict, key: str, where: str, default=None, required=False, kind=float):
    if key not in tbl:
        if required:
            raise ConfigError(f"missing required key '{where}{key}'")
        return default
    v = tbl[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"key '{where}{key}' must be a number, got {v!r}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"key '{where}{key}' must be an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(f"key '{where}{key}' must be finite, got {v!r}")
    return float(v)


def _unknown(tbl: dict, allowed: set, where: str):
    extra = sorted(set(tbl) - allowed)
    if extra:
        raise ConfigError(f"unknown key '{where}{extra[0]}'")


def _terms(value, key: str) -> tuple[Term, ...]:
    if isinstance(value, dict):
        return tuple(Term(_coef(c, key), p) for p, c in value.items())
    if not isinstance(value, list):
        raise ConfigError(f"key model.{key!r} must be a table or a list")
    out = []
    for item in value:
        if isinstance(item, str):
            out.append(Term(1.0, item))
        elif isinstance(item, dict) and "pattern" in item:
            out.append(Term(_coef(item.get("coef", 1.0), key), str(item["pattern"])))
        else:
            raise ConfigError(f"entry {item!r} of model.{key!r} needs a 'pattern'")
    return tuple(out)


def _coef(c, key):
    if isinstance(c, list) and len(c) == 2:
        return complex(float(c[0]), float(c[1]))
    if isinstance(c, bool) or not isinstance(c, (int, float)):
        raise ConfigError(f"coefficient {c!r} in model.{key!r} must be a number or [re, im]")
    return float(c)


def _model(tbl: dict, n: int) -> ModelSpec:
    _unknown(tbl, MODEL_KEYS, "model.")
    name = tbl.get("name", "custom")
    if name not in MODEL_NAMES:
        raise ConfigError(f"key 'model.name' must be one of {MODEL_NAMES}, got {name!r}")
    c = _number(tbl, "c", "model.", required=True)
    charge = tbl.get("charge", "Z")
    if name == "xxz_dephasing":
        delta = _number(tbl, "delta", "model.", required=True)
        return xxz_dephasing(delta, c, n).with_(charge=charge)
    if name == "dephasing":
        return dephasing_only(c, n).with_(charge=charge)
    if "jumps" not in tbl:
        raise ConfigError("missing required key 'model.jumps' for a custom model")
    H = _terms(tbl.get("hamiltonian", []), "hamiltonian")
    jumps = _terms(tbl["jumps"], "jumps")
    return ModelSpec(H, jumps, c, charge=charge, n=n, name="custom")


def _sweep(tbl: dict) -> SweepAxis:
    _unknown(tbl, SWEEP_KEYS, "sweep.")
    if "param" not in tbl:
        raise ConfigError("missing required key 'sweep.param'")
    param = str(tbl["param"])
    if "values" in tbl:
        vals = tbl["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("key 'sweep.values' must be a nonempty list")
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"key 'sweep.values' has a non-finite or non-numeric entry {v!r}")
        return SweepAxis(param, tuple(float(v) for v in vals))
    start = _number(tbl, "start", "sweep.", required=True)
    stop = _number(tbl, "stop", "sweep.", required=True)
    points = _number(tbl, "points", "sweep.", default=1, kind=int)
    if points < 1:
        raise ConfigError(f"key 'sweep.points' must be >= 1, got {points}")
    scale = tbl.get("scale", "linear")
    if scale not in ("linear", "log"):
        raise ConfigError(f"key 'sweep.scale' must be 'linear' or 'log', got {scale!r}")
    if scale == "log" and (start <= 0 or stop <= 0):
        raise ConfigError("log-spaced sweep needs positive 'sweep.start' and 'sweep.stop'")
    return SweepAxis.span(param, start, stop, points, scale)


def parse_config(text: str) -> RunConfig:
    """Parse and validate; ValidationError from the model passes through unchanged."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    _unknown(raw, TOP_KEYS, "")
    if "model" not in raw or not isinstance(raw["model"], dict):
        raise ConfigError("missing required table 'model'")
    n = _number(raw, "truncation", "", default=7, kind=int)
    if n < 1:
        raise ConfigError(f"key 'truncation' must be >= 1, got {n}")
    model = _model(raw["model"], n)
    method = raw.get("method", "resolvent")
    if method not in METHODS:
        raise ConfigError(f"key 'method' must be one of {METHODS}, got {method!r}")
    fmt = raw.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"key 'format' must be one of {FORMATS}, got {fmt!r}")
    kpoints = _number(raw, "kpoints", "", default=64, kind=int)
    ring = _number(raw, "ring_sites", "", default=8, kind=int)
    workers = _number(raw, "workers", "", default=1, kind=int)
    for key, v, lo in (("kpoints", kpoints, 1), ("ring_sites", ring, 2), ("workers", workers, 1)):
        if v < lo:
            raise ConfigError(f"key {key!r} must be >= {lo}, got {v}")
    a_prime = _number(raw, "a_prime", "", default=1.0)
    if a_prime < 1:
        raise ConfigError(f"key 'a_prime' must be >= 1, got {a_prime}")
    v_lr = _number(raw, "v_lr", "")
    if v_lr is not None and v_lr <= 0:
        raise ConfigError(f"key 'v_lr' must be positive, got {v_lr}")
    band = raw.get("band", True)
    if not isinstance(band, bool):
        raise ConfigError("key 'band' must be a boolean")
    sweep = _sweep(raw["sweep"]) if "sweep" in raw else None
    if sweep is not None:
        for v in sweep.values[:1]:
            set_param(model, sweep.param, v)
    for key in ("cache", "out"):
        if key in raw and not isinstance(raw[key], str):
            raise ConfigError(f"key {key!r} must be a path string")
    return RunConfig(model=model, method=method, kpoints=kpoints, ring_sites=ring,
                     a_prime=a_prime, v_lr=v_lr, band=band, sweep=sweep,
                     out=raw.get("out"), format=fmt, cache=raw.get("cache"), workers=workers)


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
