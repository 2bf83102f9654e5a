import json

import numpy as np
import pytest

from hokdv import report
from hokdv.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from hokdv.config import CONFIG_VERSION, ConfigError, RunConfig
from hokdv.params import EquationParams
from hokdv.sweep import GROWTH_FACTOR, SweepReport, SweepRow, epsilon_sweep

SMALL_SIM = {
    "version": 1, "params": {"n": 5, "p": 2, "sign": 1}, "grid": {"length": 400.0, "count": 512},
    "data": {"kind": "gaussian", "width": 6.0}, "eps": 0.05, "T": 5.0, "t0": 1.0,
    "samples": {"kind": "linear", "count": 5}, "checks": ["conservation", "checkpoint"],
    "decay": {"times": [16.0, 64.0, 256.0]}, "seed": 7,
}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    cfg = dict(cfg, out=str(tmp_path / "out"))
    path.write_text(json.dumps(cfg))
    return path


def _outputs(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


# ------------------------------------------------------------------ config


def test_config_round_trip():
    cfg = RunConfig.from_dict(dict(SMALL_SIM))
    again = RunConfig.from_dict(json.loads(cfg.to_json()))
    assert again.to_json() == cfg.to_json()
    assert again.params == EquationParams(5, 2)
    assert again.version == CONFIG_VERSION


@pytest.mark.parametrize("bad", [
    {"version": 99, "params": {"n": 5, "p": 2}},
    {"params": {"n": 5, "p": 2}, "colour": "red"},
    {"eps": 0.1},
    {"params": {"n": 5, "p": 2}, "seed": -1},
    {"params": {"n": 5, "p": 2}, "seed": 2**64},
    {"params": {"n": 5, "p": 2}, "T": 0.5, "t0": 1.0},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_config_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        RunConfig.load(tmp_path / "missing.json")
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(p)


def test_sample_times():
    cfg = RunConfig.from_dict(dict(SMALL_SIM))
    assert np.allclose(cfg.sample_times(), np.linspace(1, 5, 5))
    cfg.samples = {"kind": "geometric", "count": 3}
    assert np.allclose(cfg.sample_times(), [1.0, np.sqrt(5), 5.0])
    cfg.samples = {"kind": "list", "times": [3.0, 2.0]}
    assert list(cfg.sample_times()) == [2.0, 3.0]
    cfg.samples = {"kind": "spiral"}
    with pytest.raises(ConfigError):
        cfg.sample_times()


# ------------------------------------------------------------------ report


def test_report_writers_are_deterministic(tmp_path):
    rows = [("a", "b"), (0.1, np.float64(1 / 3)), (np.int64(2), complex(1, -1))]
    summary = {"x": np.array([1.0, np.inf]), "flag": np.bool_(True), "z": 1 + 2j}
    p1 = report.write_report(tmp_path / "one", "r", rows, summary, "csv")
    p2 = report.write_report(tmp_path / "two", "r", rows, summary, "csv")
    assert [a.read_bytes() for a in p1] == [b.read_bytes() for b in p2]
    assert p1[0].read_text().splitlines()[1] == "0.1,0.3333333333333333"
    s = json.loads(p1[1].read_text())
    assert s == {"flag": True, "x": [1.0, "inf"], "z": {"im": 2.0, "re": 1.0}}
    (j,) = report.write_report(tmp_path, "r", rows, summary, "json")
    d = json.loads(j.read_text())
    assert d["columns"] == ["a", "b"] and len(d["rows"]) == 2
    with pytest.raises(ValueError):
        report.write_report(tmp_path, "r", rows, summary, "xml")


def test_plot_data(tmp_path):
    p = report.write_plot_data(tmp_path / "a" / "p.dat", [1.0, 2.0], [0.5, 0.25])
    assert p.read_text() == "1.0 0.5\n2.0 0.25\n"


# ------------------------------------------------------------------- sweep


def test_sweep_report_slope_and_censoring():
    P = EquationParams(5, 2)
    rows = [SweepRow(e, 100.0, 3.0 * e ** (-5 / 3), False, 2.5, True) for e in (0.2, 0.3, 0.45)]
    rep = SweepReport(P, rows)
    assert rep.slope == pytest.approx(5 / 3, rel=1e-12) and rep.within_tolerance
    rows[0] = SweepRow(0.2, 100.0, 100.0, True, 1.2, True)
    rep = SweepReport(P, rows)
    assert len(rep.uncensored) == 2
    assert rep.to_dict()["rows"][0]["censored"] is True
    assert SweepReport(P, rows[:1]).slope is None


def test_sweep_run_reports_censoring():
    rep = epsilon_sweep(EquationParams(5, 2), [0.45, 0.3], max_horizon=20.0, samples=12)
    assert [r.eps for r in rep.rows] == [0.3, 0.45]
    assert all(r.valid for r in rep.rows)
    for r in rep.rows:
        # the maximum of |f_hat| sits at xi = 0, where f_hat is conserved
        assert r.censored and r.t_star == r.horizon and r.growth <= GROWTH_FACTOR
        assert "conserved" in r.note
    assert rep.slope is None and any("censored" in n for n in rep.notes)


def test_sweep_rejects_bad_input():
    with pytest.raises(ValueError):
        epsilon_sweep(EquationParams(5, 2), [-0.1])
    with pytest.raises(ValueError):
        epsilon_sweep(EquationParams(5, 5), [0.1])


# --------------------------------------------------------------------- cli


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert "config file not found" in capsys.readouterr().err
    assert main(["resonances", "--bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["resonances", "--seed", "-3"]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"params": {"n": 4, "p": 2}}))
    assert main(["simulate", "--config", str(bad)]) == EXIT_USAGE


def test_cli_resonances_table(capsys):
    assert main(["resonances", "--n", "5", "--p", "3"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0.987654321" in out and "space-time resonant j: 0, 1" in out


def test_cli_simulate_outputs(tmp_path):
    cfg = _write(tmp_path, SMALL_SIM)
    assert main(["simulate", "--config", str(cfg), "--format", "csv"]) == EXIT_OK
    out = tmp_path / "out"
    names = set(_outputs(out))
    assert {"simulate.csv", "simulate.summary.json", "linf.dat"} <= names
    assert {"trajectory.json", "trajectory.bin"} <= names
    summ = json.loads((out / "simulate.summary.json").read_text())
    assert summ["flags"] == {"valid": True, "mass_drift": True, "hamiltonian_drift": True}


@pytest.mark.parametrize("argv", [
    ["simulate"], ["simulate", "--format", "csv"], ["resonances"], ["decay", "--mode", "linear"],
    ["sweep"], ["profile", "--seed", "3"], ["stationary-phase"],
])
def test_cli_byte_identical(tmp_path, argv):
    cfg = dict(SMALL_SIM, sweep={"eps": [0.45], "max_horizon": 10.0, "samples": 8})
    path = _write(tmp_path, cfg)
    args = argv + ["--config", str(path)]
    rc = main(args)
    assert rc in (EXIT_OK, EXIT_FAIL)
    first = _outputs(tmp_path / "out")
    assert first
    assert main(args) == rc
    assert _outputs(tmp_path / "out") == first
