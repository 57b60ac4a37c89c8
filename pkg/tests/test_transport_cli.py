import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import hydrobound.sweep as sweep_mod
from hydrobound.bound import TransportReport, assemble_bound, interaction_range, read_csv, write_csv
from hydrobound.cli import main
from hydrobound.config import parse_config
from hydrobound.errors import ConfigError, InvalidBoundInput, ValidationError
from hydrobound.generator import ModelSpec, Term, dephasing_only, xxz_dephasing
from hydrobound.pauli import LocalOperator
from hydrobound.sweep import run_sweep


def test_bound_arithmetic_example():
    r = assemble_bound(1.0, (0.0, 2.0), (0.0, 4.0), 0.5, 1.0, 1.0, 3.0, 1)
    assert (r.alpha, r.beta) == (3.0, 6.0)
    assert r.bound_rhs == 44.0 and r.satisfied


def test_bound_a_prime_e():
    r = assemble_bound(1.0, (0.0, 2.0), (0.0, 4.0), 0.5, 1.7, math.e, 3.0, 1)
    assert r.beta == pytest.approx(9 * 1.7, rel=1e-15)


def test_bound_uses_analytic_lr_velocity():
    r = assemble_bound(0.3, (0.0, 2.0), (4.0, 4.0), 0.4, 2.0, 1.0, 2.0 + 0.5, 1)
    assert r.bound_rhs == pytest.approx(2.0 + (6.0 * 2.5 * 0.4 + 12.0) * 4.0)


@pytest.mark.parametrize("kw", [dict(A=0.0), dict(tau=-1.0), dict(v_lr=0.0), dict(a_prime=0.5),
                                dict(D=float("nan")), dict(A=float("inf"))])
def test_bound_invalid_inputs(kw):
    args = dict(D=1.0, D0_interval=(0.0, 2.0), v_C_interval=(0.0, 4.0), tau=0.5, A=1.0, a_prime=1.0,
                v_lr=3.0, xi=1)
    args.update(kw)
    with pytest.raises(InvalidBoundInput):
        assemble_bound(**args)


@given(st.floats(0, 10), st.floats(0, 5), st.floats(0, 5), st.floats(0.01, 5), st.floats(0.01, 20),
       st.floats(1, 10), st.floats(0.01, 5), st.integers(0, 3))
def test_bound_invariants(D, D0, vC, tau, A, ap, vlr, xi):
    r = assemble_bound(D, (0.0, D0), (0.0, vC), tau, A, ap, vlr, xi)
    assert r.alpha == 3 * A and r.beta == 3 * A * (2 + math.log(ap))
    assert r.bound_rhs == D0 + (r.alpha * vlr * tau + r.beta * xi) * vC
    assert r.satisfied == (D <= r.bound_rhs)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=6, max_size=6))
def test_json_and_csv_roundtrip_bit_exact(vals):
    D, d0, vc, tau, A, vlr = vals
    r = TransportReport(D=D, D0=(0.0, d0), v_C=(0.0, vc), tau=tau, A=A, a_prime=1.0, v_lr=vlr, xi=1,
                        alpha=3 * A, beta=6 * A, bound_rhs=d0 + vc, satisfied=True, param=0.1,
                        D_lo=D, D_hi=D, loss=0.5)
    back = TransportReport.from_json(r.to_json())
    assert back == r
    row = read_csv(write_csv([r]))[0]
    for key, val in r.csv_row().items():
        assert row[key] == val or (isinstance(val, float) and np.isnan(val) and np.isnan(row[key]))


def test_interaction_range():
    assert interaction_range(xxz_dephasing(1.0, 1.0)) == 1
    assert interaction_range(dephasing_only(1.0)) == 0
    assert interaction_range(ModelSpec([Term(1.0, "XIX")], [Term(1.0, "Z")], c=1.0)) == 2
    jump = LocalOperator.from_label("XIIY")
    assert interaction_range(ModelSpec([], [jump], c=1.0)) == 3


XXZ_CONFIG = """
model.name = "xxz_dephasing"
model.delta = 1.0
model.c = 2.0
"""


def test_parse_builtin_model():
    cfg = parse_config(XXZ_CONFIG)
    m = cfg.model
    assert {t.pattern: t.coef for t in m.hamiltonian} == {"XX": 1, "YY": 1, "ZZ": 1.0}
    assert [j.pattern for j in m.jumps] == ["Z"]
    assert (m.n, cfg.kpoints, cfg.ring_sites, cfg.a_prime) == (7, 64, 8, 1.0)


def test_parse_missing_c():
    with pytest.raises(ConfigError, match="model.c"):
        parse_config('[model]\nname = "xxz_dephasing"\ndelta = 1.0\n')


def test_parse_custom_dephasing_only():
    m = parse_config('[model]\nname = "custom"\nc = 0.5\njumps = ["Z"]\n').model
    assert m.hamiltonian == () and [j.pattern for j in m.jumps] == ["Z"] and m.c == 0.5


def test_parse_custom_hamiltonian_forms():
    a = parse_config('[model]\nc = 1.0\njumps = ["Z"]\nhamiltonian = {XX = 1.0, YY = 1.0, ZZ = 0.5}\n').model
    b = parse_config('[model]\nc = 1.0\njumps = [{pattern = "Z", coef = 1.0}]\n'
                     'hamiltonian = [{pattern = "XX", coef = 1.0}, {pattern = "YY"}, {pattern = "ZZ", coef = 0.5}]\n').model
    assert a.hamiltonian == b.hamiltonian and a.jumps == b.jumps


def test_parse_errors_name_the_problem():
    with pytest.raises(ConfigError, match="line"):
        parse_config("[model\nc = 1")
    with pytest.raises(ConfigError, match="bogus"):
        parse_config(XXZ_CONFIG + "bogus = 1\n")
    with pytest.raises(ConfigError, match="sweep.points"):
        parse_config(XXZ_CONFIG + "[sweep]\nparam = 'c'\nstart = 1.0\nstop = 2.0\npoints = 0\n")
    with pytest.raises(ConfigError, match="finite"):
        parse_config(XXZ_CONFIG + "[sweep]\nparam = 'c'\nstart = 1.0\nstop = inf\n")


def test_parse_validation_error_passes_through():
    with pytest.raises(ValidationError):
        parse_config('[model]\nname = "xxz_dephasing"\ndelta = 1.0\nc = -2.0\n')


def test_sweep_axis():
    cfg = parse_config(XXZ_CONFIG + "[sweep]\nparam = 'c'\nstart = 1.0\nstop = 8.0\npoints = 4\nscale = 'log'\n")
    np.testing.assert_allclose(cfg.sweep.values, [1, 2, 4, 8])
    assert cfg.point(4.0).model.c == 4.0


FAST = """
truncation = {n}
kpoints = 4
ring_sites = 6
cache = "{cache}"
[model]
name = "xxz_dephasing"
delta = 1.0
c = 8.0
[sweep]
param = "c"
values = {values}
"""


def test_strong_dephasing_sweep_column(tmp_path):
    cfg = parse_config(FAST.format(n=5, cache="", values="[8.0, 16.0, 32.0]").replace('cache = ""\n', ""))
    rows = run_sweep(cfg.with_(band=False))
    for r, tol in zip(rows, (0.2, 0.1, 0.05)):
        assert r.error is None
        assert abs(r.param * r.D - 1) <= tol


def test_single_point_sweep_equals_single_run(tmp_path):
    cfg = parse_config(FAST.format(n=3, cache="", values="[8.0]").replace('cache = ""\n', ""))
    row = run_sweep(cfg)[0]
    single = sweep_mod.compute_report(cfg.point(8.0), 8.0)
    assert write_csv([row]) == write_csv([single])


def test_warm_cache_skips_solvers(tmp_path):
    cfg = parse_config(FAST.format(n=3, cache=tmp_path / "c", values="[4.0, 8.0]"))
    cold = write_csv(run_sweep(cfg))
    calls = sweep_mod.solver_calls
    warm = write_csv(run_sweep(cfg))
    assert sweep_mod.solver_calls == calls and warm == cold
    assert len(list((tmp_path / "c").glob("*.json"))) == 2


def test_cold_cache_is_deterministic(tmp_path):
    a = write_csv(run_sweep(parse_config(FAST.format(n=3, cache=tmp_path / "a", values="[4.0]"))))
    b = write_csv(run_sweep(parse_config(FAST.format(n=3, cache=tmp_path / "b", values="[4.0]"))))
    assert a == b


def test_stale_cache_version_ignored(tmp_path, monkeypatch):
    cfg = parse_config(FAST.format(n=3, cache=tmp_path, values="[4.0]"))
    run_sweep(cfg)
    path = next(tmp_path.glob("*.json"))
    blob = json.loads(path.read_text())
    blob["version"] = "0.0.0"
    path.write_text(json.dumps(blob))
    calls = sweep_mod.solver_calls
    run_sweep(cfg)
    assert sweep_mod.solver_calls == calls + 1


def test_sweep_records_errors_and_continues():
    cfg = parse_config(FAST.format(n=3, cache="", values="[0.0, 4.0]").replace('cache = ""\n', ""))
    cfg = cfg.with_(model=ModelSpec([Term(1.0, "XX"), Term(1.0, "YY")], [Term(1.0, "Z")], c=1.0, n=3),
                    v_lr=2.0)
    rows = run_sweep(cfg)
    assert rows[0].error and "Ballistic" in rows[0].error
    assert rows[1].error is None and rows[1].satisfied


def test_parallel_sweep_matches_serial(tmp_path):
    cfg = parse_config(FAST.format(n=3, cache="", values="[4.0, 8.0]").replace('cache = ""\n', ""))
    assert write_csv(run_sweep(cfg.with_(workers=2))) == write_csv(run_sweep(cfg))


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[model]\nname = "xxz_dephasing"\ndelta = 1.0\n')
    assert main(["bound", "--config", str(bad)]) == 4
    ball = tmp_path / "ball.toml"
    ball.write_text('truncation = 3\n[model]\nc = 0.0\nhamiltonian = {XX = 1.0, YY = 1.0}\njumps = ["Z"]\n')
    assert main(["diffusivity", "--config", str(ball)]) == 2
    deph = tmp_path / "deph.toml"
    deph.write_text('truncation = 3\nkpoints = 4\n[model]\nname = "dephasing"\nc = 1.0\n')
    assert main(["bound", "--config", str(deph)]) == 4   # J = 0 gives A = 0
    assert main(["diffusivity", "--truncation", "0"]) == 4


def test_cli_outputs(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert main(["diffusivity", "--truncation", "3", "--c", "4", "--method", "all", "--format", "json",
                 "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert {r["method"] for r in rows} == {"resolvent", "integral", "direct"}
    assert main(["tau", "--truncation", "3", "--kpoints", "4"]) == 0
    assert capsys.readouterr().out.startswith("# tau = ")
    assert main(["dispersion", "--truncation", "3", "--k", "0.1"]) == 0
    assert "omega_im" in capsys.readouterr().out
    assert main(["bound", "--truncation", "3", "--kpoints", "4", "--ring-sites", "6", "--c", "4"]) == 0
    header, line = capsys.readouterr().out.strip().splitlines()
    assert header.split(",")[0] == "param" and line.split(",")[11] == "true"
