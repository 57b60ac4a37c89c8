"""Assembly of the locality bound and the serialisable transport report."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

from .errors import InvalidBoundInput
from .generator import ModelSpec, Term
from .pauli import LocalOperator

CSV_COLUMNS = ("param", "D", "D_lo", "D_hi", "tau", "D0_hi", "vC_hi", "A", "alpha", "beta",
               "bound_rhs", "satisfied", "loss", "error")


def _trimmed_extent(pattern) -> int:
    if isinstance(pattern, LocalOperator):
        sup = pattern.without_identity().support
        return sup[-1] - sup[0] + 1 if sup else 0
    idx = [j for j, ch in enumerate(pattern) if ch != "I"]
    return idx[-1] - idx[0] + 1 if idx else 0


def interaction_range(model: ModelSpec) -> int:
    """xi = max over Hamiltonian and jump patterns of (extent - 1)."""
    ext = [_trimmed_extent(t.pattern) for t in model.hamiltonian]
    ext += [_trimmed_extent(j.pattern if isinstance(j, Term) else j) for j in model.jumps]
    return max([e - 1 for e in ext if e > 0], default=0)


@dataclass
class TransportReport:
    D: float
    D0: tuple[float, float]
    v_C: tuple[float, float]
    tau: float
    A: float
    a_prime: float
    v_lr: float
    xi: int
    alpha: float
    beta: float
    bound_rhs: float
    satisfied: bool
    model: dict = field(default_factory=dict)
    param: float | None = None
    D_lo: float | None = None
    D_hi: float | None = None
    D_methods: dict = field(default_factory=dict)
    D_spread: float = 0.0
    A_meta: dict = field(default_factory=dict)
    v_lr_source: str = "input"
    loss: float = 0.0
    unvalidated: bool = False
    error: str | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["D0"], d["v_C"] = list(self.D0), list(self.v_C)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TransportReport":
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in names}
        kw["D0"], kw["v_C"] = tuple(kw["D0"]), tuple(kw["v_C"])
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TransportReport":
        return cls.from_dict(json.loads(text))

    def csv_row(self) -> dict:
        return {
            "param": self.param, "D": self.D, "D_lo": self.D_lo, "D_hi": self.D_hi,
            "tau": self.tau, "D0_hi": self.D0[1], "vC_hi": self.v_C[1], "A": self.A,
            "alpha": self.alpha, "beta": self.beta, "bound_rhs": self.bound_rhs,
            "satisfied": self.satisfied, "loss": self.loss, "error": self.error,
        }


def failed_report(param, error: str, model: dict | None = None) -> TransportReport:
    nan = float("nan")
    return TransportReport(D=nan, D0=(nan, nan), v_C=(nan, nan), tau=nan, A=nan, a_prime=nan,
                           v_lr=nan, xi=0, alpha=nan, beta=nan, bound_rhs=nan, satisfied=False,
                           model=model or {}, param=param, error=error)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def write_csv(reports, stream=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        row = r.csv_row()
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_csv(text: str) -> list[dict]:
    """Rows of an emitted CSV with numeric fields parsed back to floats."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for k, v in row.items():
            if k == "error":
                parsed[k] = v or None
            elif k == "satisfied":
                parsed[k] = v == "true"
            else:
                parsed[k] = float(v) if v != "" else None
        out.append(parsed)
    return out


def _require(cond: bool, msg: str):
    if not cond:
        raise InvalidBoundInput(msg)


def assemble_bound(D: float, D0_interval, v_C_interval, tau: float, A: float, a_prime: float,
                   v_lr: float, xi: int, **extra) -> TransportReport:
    """D <= D0 + (alpha v_LR tau + beta xi) v_C with alpha = 3A, beta = 3A(2 + ln A')."""
    vals = [D, *D0_interval, *v_C_interval, tau, A, a_prime, v_lr, xi]
    _require(all(math.isfinite(float(v)) for v in vals), "bound inputs must be finite")
    _require(A > 0, f"A must be positive, got {A}")
    _require(tau > 0, f"tau must be positive, got {tau}")
    _require(v_lr > 0, f"v_LR must be positive, got {v_lr}")
    _require(a_prime >= 1, f"A' must be >= 1, got {a_prime}")
    _require(xi >= 0 and int(xi) == xi, f"xi must be a non-negative integer, got {xi}")
    alpha = 3.0 * A
    beta = 3.0 * A * (2.0 + math.log(a_prime))
    rhs = D0_interval[1] + (alpha * v_lr * tau + beta * xi) * v_C_interval[1]
    return TransportReport(
        D=float(D), D0=(float(D0_interval[0]), float(D0_interval[1])),
        v_C=(float(v_C_interval[0]), float(v_C_interval[1])), tau=float(tau), A=float(A),
        a_prime=float(a_prime), v_lr=float(v_lr), xi=int(xi), alpha=alpha, beta=beta,
        bound_rhs=rhs, satisfied=bool(D <= rhs), **extra,
    )
