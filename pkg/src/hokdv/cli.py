"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 usage error (bad flag, missing or
invalid config).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigError, RunConfig
from .params import EquationParams, ParameterError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

MASS_DRIFT_TOL = 1e-8
HAMILTONIAN_DRIFT_TOL = 1e-6


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="RNG seed, unsigned 64-bit (overrides the config)")
    common.add_argument("--format", choices=("csv", "json"), default="json", help="report format")

    ap = argparse.ArgumentParser(prog="hokdv", description="Higher-order KdV dispersive-decay toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the solver and check conservation")
    r = sub.add_parser("resonances", parents=[common], help="stationary families of the phase")
    r.add_argument("--n", type=int)
    r.add_argument("--p", type=int)
    r.add_argument("--xi", type=float, default=1.0)
    d = sub.add_parser("decay", parents=[common], help="decay-envelope checks (linear or nonlinear)")
    d.add_argument("--mode", choices=("linear", "nonlinear"))
    sub.add_parser("stationary-phase", parents=[common], help="stationary-phase oracle on the test corpus")
    sub.add_parser("profile", parents=[common], help="profile equation consistency checks")
    sub.add_parser("sweep", parents=[common], help="epsilon sweep of the linear-regime time")
    return ap


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.out:
        cfg.out = args.out
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    return cfg


def _emit(cfg, args, name, rows, summary) -> list:
    return report.write_report(cfg.out, name, rows, summary, args.format)


# ------------------------------------------------------------ subcommands


def cmd_simulate(cfg: RunConfig, args) -> int:
    from .evolution import run, save_trajectory

    g = cfg.make_grid()
    u0 = cfg.initial_data(g)
    tr = run(cfg.params, u0, cfg.T, sample_times=cfg.sample_times(), t0=cfg.t0, dt=cfg.dt, eps=cfg.eps)
    rows = [("t", "mass", "hamiltonian", "boundary", "tail", "linf")]
    for i, t in enumerate(tr.times):
        rows.append((float(t), tr.ledger.mass[i], tr.ledger.hamiltonian[i], float(tr.boundary[i]),
                     float(tr.tail[i]), float(np.abs(tr.fields[i].physical).max())))
    md, hd = tr.ledger.mass_drift(), tr.ledger.hamiltonian_drift()
    flags = {"valid": bool(tr.valid)}
    if "conservation" in cfg.checks:
        flags["mass_drift"] = bool(md <= MASS_DRIFT_TOL)
        flags["hamiltonian_drift"] = bool(hd <= HAMILTONIAN_DRIFT_TOL)
    summary = {"config": cfg.to_dict(), "grid": g.to_dict(), "dt": tr.dt, "steps": tr.steps,
               "mass_drift": md, "hamiltonian_drift": hd, "max_tail": float(tr.tail.max()),
               "flags": flags, "notes": list(tr.notes)}
    _emit(cfg, args, "simulate", rows, summary)
    if "checkpoint" in cfg.checks:
        save_trajectory(tr, Path(cfg.out) / "trajectory")
    report.write_plot_data(Path(cfg.out) / "linf.dat", tr.times, [r[5] for r in rows[1:]])
    return EXIT_OK if all(flags.values()) else EXIT_FAIL


def cmd_resonances(cfg: RunConfig, args) -> int:
    from .resonance import classify

    n = args.n if args.n is not None else cfg.params.n
    p = args.p if args.p is not None else cfg.params.p
    rep = classify(n, p, args.xi)
    print(rep.table())
    if args.out or args.config:
        rows = [("j", "xi_j", "multiplicity", "d_j", "time_resonant", "signature", "determinant")]
        for f in rep.families:
            rows.append((f.j, f.value, f.multiplicity, f.d, int(f.time_resonant), f.signature, f.determinant))
        _emit(cfg, args, "resonances", rows, rep.to_dict())
    return EXIT_OK


def cmd_decay(cfg: RunConfig, args) -> int:
    from .decay import DEFAULT_TIMES, LinearData, check_nonlinear_decay, linear_decay_suite

    dc = cfg.decay
    mode = args.mode or dc.get("mode", "linear")
    n = cfg.params.n
    if mode == "linear":
        data = LinearData.gaussian(dc.get("width", 1.5), tuple(dc.get("band", (1.2, 2.0))))
        res = linear_decay_suite(n, dc.get("times", DEFAULT_TIMES), dc.get("q", 8.0), data)
        rep = res["report"]
        gating = dc.get("checks") or list(res["checks"])
        flags = {k: v["passed"] for k, v in res["checks"].items() if k in gating}
        summary = {"mode": mode, "checks": res["checks"], "gating": gating, "report": rep.summary(),
                   "flags": flags}
    else:
        from .evolution import run

        g = cfg.make_grid()
        tr = run(cfg.params, cfg.initial_data(g), cfg.T, sample_times=cfg.sample_times(), t0=cfg.t0,
                 dt=cfg.dt, eps=cfg.eps)
        rep = check_nonlinear_decay(tr, tuple(dc.get("betas", (0.0,))))
        flags = dict(rep.flags)
        summary = {"mode": mode, "report": rep.summary(), "flags": flags}
    _emit(cfg, args, "decay", rep.rows(), summary)
    return EXIT_OK if all(flags.values()) else EXIT_FAIL


def cmd_stationary_phase(cfg: RunConfig, args) -> int:
    from .oscillatory import corpus_check

    res = corpus_check()
    rows = [("name", "d", "order", "target", "passed")]
    for c in res["cases"]:
        rows.append((c["name"], c["d"], c["order"], c["target"], int(c["passed"])))
    _emit(cfg, args, "stationary_phase", rows, res)
    ok = all(c["passed"] for c in res["cases"]) and res["fresnel"]["passed"]
    return EXIT_OK if ok else EXIT_FAIL


def cmd_profile(cfg: RunConfig, args) -> int:
    from .profile import profile_checks

    res = profile_checks(cfg.params, rng=cfg.rng())
    rows = [("check", "measured", "tolerance", "passed")]
    for k in sorted(res["checks"]):
        v = res["checks"][k]
        rows.append((k, v["measured"], v["tolerance"], int(v["passed"])))
    _emit(cfg, args, "profile", rows, res)
    return EXIT_OK if all(v["passed"] for v in res["checks"].values()) else EXIT_FAIL


def cmd_sweep(cfg: RunConfig, args) -> int:
    from .sweep import epsilon_sweep

    sc = cfg.sweep
    rep = epsilon_sweep(cfg.params, sc.get("eps", (0.2, 0.3, 0.45)), sc.get("horizon_factor", 10.0),
                        sc.get("max_horizon", 500.0), cfg.data.get("width", 6.0), sc.get("samples", 60),
                        cfg.t0, sc.get("workers", 1))
    _emit(cfg, args, "sweep", rep.csv_rows(), rep.to_dict())
    # advisory: censoring is reported, never a failure; only invalid runs fail
    return EXIT_OK if all(r.valid for r in rep.rows) else EXIT_FAIL


COMMANDS = {
    "simulate": cmd_simulate, "resonances": cmd_resonances, "decay": cmd_decay,
    "stationary-phase": cmd_stationary_phase, "profile": cmd_profile, "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        cfg = _config(args)
    except FileNotFoundError as e:
        print(f"hokdv: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ParameterError, UsageError, TypeError, KeyError) as e:
        print(f"hokdv: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg, args)
    except ParameterError as e:
        print(f"hokdv: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
