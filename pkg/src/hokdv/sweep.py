"""Epsilon sweeps probing how long solutions stay in the linear regime.

For each eps a run stops at the first sample where ||f_hat(t)||_inf exceeds
GROWTH_FACTOR * ||f_hat(t0)||_inf.  Runs that reach the horizon are censored:
their T* is only a lower bound and they are left out of the slope fit.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decay import loglog_fit
from .evolution import choose_grid, initial_data, run
from .params import EquationParams

GROWTH_FACTOR = 2.0
SLOPE_TOLERANCE = 0.30  # relative, advisory


@dataclass(frozen=True)
class SweepRow:
    eps: float
    horizon: float
    t_star: float
    censored: bool
    growth: float  # max over the run of ||f_hat(t)||_inf / ||f_hat(t0)||_inf
    valid: bool
    note: str = ""


@dataclass
class SweepReport:
    params: EquationParams
    rows: list
    growth_factor: float = GROWTH_FACTOR
    notes: list = field(default_factory=list)

    @property
    def predicted_slope(self) -> float | None:
        return self.params.critical_exponent

    @property
    def uncensored(self) -> list:
        return [r for r in self.rows if not r.censored and r.valid]

    @property
    def slope(self) -> float | None:
        """Least-squares slope of log T* against log(1/eps) over uncensored runs."""
        rows = self.uncensored
        if len(rows) < 2:
            return None
        return loglog_fit([1 / r.eps for r in rows], [r.t_star for r in rows]).slope

    @property
    def within_tolerance(self) -> bool | None:
        s, a = self.slope, self.predicted_slope
        if s is None or a is None:
            return None
        return abs(s - a) <= SLOPE_TOLERANCE * a

    def csv_rows(self) -> list:
        out = [("eps", "horizon", "t_star", "censored", "growth", "valid")]
        for r in self.rows:
            out.append((r.eps, r.horizon, r.t_star, int(r.censored), r.growth, int(r.valid)))
        return out

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(), "growth_factor": self.growth_factor,
            "predicted_slope": self.predicted_slope, "slope": self.slope,
            "within_tolerance": self.within_tolerance, "tolerance": SLOPE_TOLERANCE,
            "uncensored": len(self.uncensored),
            "rows": [{"eps": r.eps, "horizon": r.horizon, "t_star": r.t_star, "censored": r.censored,
                      "growth": r.growth, "valid": r.valid, "note": r.note} for r in self.rows],
            "notes": list(self.notes),
        }


def _one(args) -> SweepRow:
    params, eps, horizon, width, samples, t0 = args
    g = choose_grid(params, horizon, width)
    u0 = initial_data(g, params, eps=eps, width=width)
    ref = float(np.abs(u0.fourier).max())
    peak = [1.0]

    def stop(t, u):
        r = float(np.abs(u.fourier).max()) / ref
        peak[0] = max(peak[0], r)
        return r > GROWTH_FACTOR

    ts = np.geomspace(t0, horizon, samples)
    tr = run(params, u0, horizon, sample_times=ts, t0=t0, eps=eps, stop=stop)
    # the stop hook skips the final sample; test it here
    final = float(np.abs(tr.final.fourier).max()) / ref
    peak[0] = max(peak[0], final)
    fired = tr.stopped_at is not None or final > GROWTH_FACTOR
    t_star = float(tr.times[-1]) if fired else float(horizon)
    notes = list(tr.notes)
    if int(np.argmax(np.abs(u0.fourier))) == 0:
        # d/dt f_hat(0) = 0: the peak cannot grow when it sits at the zero mode
        notes.append("peak of |f_hat| at xi = 0, where f_hat is conserved")
    return SweepRow(float(eps), float(horizon), t_star, not fired, peak[0], bool(tr.valid), "; ".join(notes))


def epsilon_sweep(params: EquationParams, eps_list, horizon_factor: float = 10.0, max_horizon: float = 500.0,
                  width: float = 6.0, samples: int = 60, t0: float = 1.0, workers: int = 1) -> SweepReport:
    """T*(eps) for each eps, with horizon min(horizon_factor * eps^(-a), max_horizon).

    a = n(p-1)/(n-p) is the predicted exponent.  Runs fan out over ``workers``
    processes; rows come back sorted by eps.
    """
    a = params.critical_exponent
    if a is None:
        raise ValueError("the sweep needs p < n")
    jobs = []
    for eps in sorted(float(e) for e in eps_list):
        if eps <= 0:
            raise ValueError("eps must be positive")
        jobs.append((params, eps, min(horizon_factor * eps ** (-a), max_horizon), width, samples, t0))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_one, jobs))
    else:
        rows = [_one(j) for j in jobs]
    rows.sort(key=lambda r: r.eps)
    rep = SweepReport(params, rows)
    if any(r.censored for r in rows):
        rep.notes.append(f"{sum(r.censored for r in rows)} run(s) censored: no growth past "
                         f"{GROWTH_FACTOR:g}x before the horizon; T* is a lower bound")
    if rep.slope is None:
        rep.notes.append("fewer than two uncensored runs; no slope fitted")
    return rep
