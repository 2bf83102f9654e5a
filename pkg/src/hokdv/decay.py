"""Decay-envelope verification for linear and nonlinear solutions.

Envelopes (r = t^(-1/n) x, <z> = sqrt(1 + z^2)):

    everywhere   |D^b u| <~ A t^(-1/n - b/n) <r>^(-(n-2)/(2n-2) + b/(n-1))
    x >~ t^(1/n) |D^b u| <~ A t^(-1/n - b/n) <r>^(-1 + b/(n-1))
    L^q          ||D^b u||_q <~ A t^(-1/n - b/n + 1/(n q))   when q((n-2)/(2n-2) - b/(n-1)) > 1

with A = ||f_hat||_inf + t^(-1/(2n)) ||x f||_2.  Waves travel left (group
velocity -n xi^(n-1)), so x < 0 is the oscillatory side.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import Trajectory
from .spectral import (
    Grid1D,
    SpectralField,
    boundary_mass_fraction,
    japanese_bracket,
    linf_fourier,
    make_grid,
    propagator_symbol,
    weighted_x_norm,
)

ELLIPTIC_CONSTANT = 1.0
BREAKDOWN_FACTOR = 2.0
BOUNDARY_TOL = 1e-8


class DecayCheckError(ValueError):
    pass


class InvalidRunError(RuntimeError):
    pass


def envelope(t, x, n: int, beta: float = 0.0):
    """t^(-1/n - beta/n) <t^(-1/n) x>^(-(n-2)/(2n-2) + beta/(n-1))."""
    z = np.asarray(x, dtype=float) * t ** (-1.0 / n)
    return t ** (-(1.0 + beta) / n) * japanese_bracket(z) ** (-(n - 2) / (2 * n - 2) + beta / (n - 1))


def elliptic_envelope(t, x, n: int, beta: float = 0.0):
    z = np.asarray(x, dtype=float) * t ** (-1.0 / n)
    return t ** (-(1.0 + beta) / n) * japanese_bracket(z) ** (-1.0 + beta / (n - 1))


def lp_exponent(n: int, beta: float, q: float) -> float:
    return -1.0 / n - beta / n + 1.0 / (n * q)


def lp_admissible(n: int, beta: float, q: float) -> bool:
    return q * ((n - 2) / (2 * n - 2) - beta / (n - 1)) > 1 and 0 <= beta < (n - 2) / 2


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    points: int
    span: float  # decades covered by the fitted variable

    @property
    def low_confidence(self) -> bool:
        return self.span < 1.0 or self.points < 3


def loglog_fit(x, y) -> Fit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < 2:
        return Fit(float("nan"), float("nan"), int(x.size), 0.0)
    s, c = np.polyfit(np.log(x), np.log(y), 1)
    return Fit(float(s), float(c), int(x.size), float(np.log10(x.max() / x.min())))


def normalisation(f: SpectralField, n: int, t: float = 1.0) -> float:
    return linf_fourier(f) + t ** (-1.0 / (2 * n)) * weighted_x_norm(f)


# ------------------------------------------------------------ linear data


@dataclass(frozen=True)
class LinearData:
    """Profile given by a callable f_hat(xi) with a known band edge (f_hat ~ 0 beyond ``xi_cut``)."""

    fhat: object
    xi_cut: float
    width: float = 1.5

    @classmethod
    def gaussian(cls, width: float = 1.5, band=(1.2, 2.0), amplitude: float = 1.0):
        from .evolution import gaussian_spectrum

        g = gaussian_spectrum(width, 0.0, band)
        return cls(lambda xi: amplitude * g(xi), float(band[1]), width)

    def grid_for(self, n: int, t: float, margin: float = 2.2, min_count: int = 1024) -> Grid1D:
        """Box holding everything that moves at speeds up to n xi_cut^(n-1) by time t."""
        speed = n * self.xi_cut ** (n - 1)
        L = margin * speed * t + 40 * self.width
        N = 2 ** int(np.ceil(np.log2(max(min_count, 1.1 * L * self.xi_cut / np.pi))))
        return make_grid(L, N)

    def profile_field(self, grid: Grid1D) -> SpectralField:
        return SpectralField.from_fourier(grid, self.fhat(grid.xi))

    def solution(self, n: int, t: float, grid: Grid1D | None = None, beta: float = 0.0,
                 ) -> SpectralField:
        """D^beta S(t) f."""
        g = grid or self.grid_for(n, t)
        uh = self.fhat(g.xi) * propagator_symbol(g, t, n)
        if beta:
            uh = uh * np.abs(g.xi) ** beta
        return SpectralField.from_fourier(g, uh)


@dataclass
class DecayReport:
    n: int
    betas: tuple
    times: np.ndarray
    A: float
    sup_ratio: dict = field(default_factory=dict)          # beta -> array over t
    elliptic_ratio: dict = field(default_factory=dict)     # beta -> array over t
    linf: dict = field(default_factory=dict)               # beta -> ||D^b u(t)||_inf
    time_fit: dict = field(default_factory=dict)           # beta -> Fit
    spatial_fit: dict = field(default_factory=dict)        # beta -> Fit at the last time
    elliptic_fit: dict = field(default_factory=dict)       # beta -> Fit at the last time
    boundary: np.ndarray | None = None
    breakdown_time: float | None = None
    flags: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def passed(self) -> bool:
        return all(self.flags.values()) if self.flags else True

    def rows(self) -> list:
        out = [("t", "beta", "linf", "sup_ratio", "elliptic_ratio")]
        for b in self.betas:
            for i, t in enumerate(self.times):
                out.append((float(t), float(b), float(self.linf[b][i]), float(self.sup_ratio[b][i]),
                            float(self.elliptic_ratio[b][i])))
        return out

    def summary(self) -> dict:
        def fd(d):
            return {str(k): {"slope": v.slope, "points": v.points, "decades": v.span,
                             "low_confidence": v.low_confidence} for k, v in d.items()}

        return {
            "n": self.n, "betas": list(map(float, self.betas)), "A": self.A,
            "times": [float(t) for t in self.times],
            "time_fit": fd(self.time_fit), "spatial_fit": fd(self.spatial_fit),
            "elliptic_fit": fd(self.elliptic_fit),
            "max_sup_ratio": {str(b): float(np.max(self.sup_ratio[b])) for b in self.betas},
            "breakdown_time": self.breakdown_time, "breakdown_factor": BREAKDOWN_FACTOR,
            "flags": {k: bool(v) for k, v in self.flags.items()}, "notes": list(self.notes),
        }


def _ratios(u_abs, x, t, n, beta, A, c_ell):
    env = A * envelope(t, x, n, beta)
    sup_ratio = float(np.max(u_abs / env))
    ell = x >= c_ell * t ** (1.0 / n)
    ell_ratio = float(np.max(u_abs[ell] / (A * elliptic_envelope(t, x[ell], n, beta)))) if ell.any() else 0.0
    return sup_ratio, ell_ratio


def peak_envelope(u: np.ndarray, x: np.ndarray):
    """Local extrema of a real oscillating signal, refined by a parabola through three samples.

    Returns (positions, |values|).
    """
    u = np.asarray(u, dtype=float)
    i = np.nonzero((np.abs(u[1:-1]) >= np.abs(u[:-2])) & (np.abs(u[1:-1]) > np.abs(u[2:])))[0] + 1
    a, b, c = u[i - 1], u[i], u[i + 1]
    den = a - 2 * b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(den != 0, 0.5 * (a - c) / den, 0.0)
    off = np.clip(off, -0.5, 0.5)
    val = b - 0.25 * (a - c) * off
    dx = x[1] - x[0]
    return x[i] + off * dx, np.abs(val)


def spatial_fit(u, x, t, n, z_range=(10.0, 100.0), side=-1) -> Fit:
    """Exponent of the oscillation envelope against <t^(-1/n) x> over |z| in ``z_range`` on one side."""
    xp, amp = peak_envelope(u, x)
    z = xp * t ** (-1.0 / n)
    sel = (side * z >= z_range[0]) & (side * z <= z_range[1])
    return loglog_fit(japanese_bracket(z[sel]), amp[sel])


def elliptic_fit(u, x, t, n, c_ell=ELLIPTIC_CONSTANT, floor=1e-10) -> Fit:
    """Exponent of |u| against <z> for z >= c_ell while it stays above ``floor`` * max|u|.

    No oscillation is present there, so |u| itself is the envelope.
    """
    amp = np.abs(np.asarray(u, dtype=float))
    z = x * t ** (-1.0 / n)
    sel = (z >= c_ell) & (amp > floor * amp.max())
    return loglog_fit(japanese_bracket(z[sel]), amp[sel])


def check_linear_decay(data: LinearData, n: int, times, betas=(0.0,), c_ell: float = ELLIPTIC_CONSTANT,
                       z_range=(10.0, 100.0), A: float | None = None) -> DecayReport:
    """Measure the linear flow of ``data`` against the decay envelopes."""
    times = np.asarray(sorted(times), dtype=float)
    for b in betas:
        if not 0 <= b <= n - 2:
            raise DecayCheckError(f"beta must lie in [0, n-2], got {b}")
    if A is None:
        g1 = data.grid_for(n, 1.0)
        A = normalisation(data.profile_field(g1), n, 1.0)
    rep = DecayReport(n, tuple(betas), times, float(A))
    rep.boundary = np.zeros(times.size)
    if A == 0:
        for b in betas:
            rep.sup_ratio[b] = np.zeros(times.size)
            rep.elliptic_ratio[b] = np.zeros(times.size)
            rep.linf[b] = np.zeros(times.size)
        rep.flags["zero_data"] = True
        return rep
    for b in betas:
        rep.sup_ratio[b] = np.zeros(times.size)
        rep.elliptic_ratio[b] = np.zeros(times.size)
        rep.linf[b] = np.zeros(times.size)
    for i, t in enumerate(times):
        g = data.grid_for(n, t)
        u0 = data.solution(n, t, g)
        rep.boundary[i] = boundary_mass_fraction(u0)
        if rep.boundary[i] > BOUNDARY_TOL:
            raise InvalidRunError(f"boundary mass {rep.boundary[i]:.2e} at t={t}")
        x = g.x
        for b in betas:
            u = data.solution(n, t, g, beta=b) if b else u0
            ua = np.abs(u.physical.real)
            rep.linf[b][i] = ua.max()
            rep.sup_ratio[b][i], rep.elliptic_ratio[b][i] = _ratios(ua, x, t, n, b, A, c_ell)
            if i == times.size - 1:
                rep.spatial_fit[b] = spatial_fit(u.physical.real, x, t, n, z_range)
                rep.elliptic_fit[b] = elliptic_fit(u.physical.real, x, t, n, c_ell)
        del u0
    for b in betas:
        rep.time_fit[b] = loglog_fit(times, rep.linf[b])
        r = rep.sup_ratio[b]
        rep.flags[f"sup_ratio_stable_beta{b:g}"] = bool(r.max() <= 2 * r.min())
    return rep


@dataclass(frozen=True)
class LpReport:
    n: int
    beta: float
    q: float
    times: tuple
    norms: tuple
    fit: Fit
    predicted: float

    @property
    def error(self) -> float:
        return abs(self.fit.slope - self.predicted)


def check_lp_decay(data: LinearData, n: int, times, beta: float, q: float) -> LpReport:
    if not lp_admissible(n, beta, q):
        raise DecayCheckError(f"q={q}, beta={beta} violate q((n-2)/(2n-2) - beta/(n-1)) > 1")
    times = np.asarray(sorted(times), dtype=float)
    vals = []
    for t in times:
        g = data.grid_for(n, t)
        u = data.solution(n, t, g, beta=beta)
        vals.append(float((g.dx * np.sum(np.abs(u.physical.real) ** q)) ** (1.0 / q)))
    return LpReport(n, float(beta), float(q), tuple(times), tuple(vals), loglog_fit(times, vals),
                    lp_exponent(n, beta, q))


def check_nonlinear_decay(traj: Trajectory, betas=(0.0,), A: float | None = None,
                          c_ell: float = ELLIPTIC_CONSTANT) -> DecayReport:
    """Envelope ratios along a run; flags the first time any ratio exceeds
    BREAKDOWN_FACTOR times its median over the run."""
    if not traj.valid:
        raise InvalidRunError("trajectory failed the boundary monitor: " + "; ".join(traj.notes))
    n = traj.params.n
    A = traj.eps if A is None else A
    times = np.asarray(traj.times, dtype=float)
    rep = DecayReport(n, tuple(betas), times, float(A))
    rep.boundary = np.asarray(traj.boundary)
    for b in betas:
        rep.sup_ratio[b] = np.zeros(times.size)
        rep.elliptic_ratio[b] = np.zeros(times.size)
        rep.linf[b] = np.zeros(times.size)
    if A == 0 or all(np.abs(f.fourier).max() == 0 for f in traj.fields):
        rep.flags["zero_data"] = True
        return rep
    x = traj.grid.x
    for i, t in enumerate(times):
        u = traj.fields[i]
        for b in betas:
            ub = u.map_fourier(np.abs(traj.grid.xi) ** b) if b else u
            ua = np.abs(ub.physical.real)
            rep.linf[b][i] = ua.max()
            rep.sup_ratio[b][i], rep.elliptic_ratio[b][i] = _ratios(ua, x, t, n, b, A, c_ell)
    first = None
    for b in betas:
        r = rep.sup_ratio[b]
        rep.time_fit[b] = loglog_fit(times, rep.linf[b])
        over = np.nonzero(r > BREAKDOWN_FACTOR * np.median(r))[0]
        if over.size and (first is None or times[over[0]] < first):
            first = float(times[over[0]])
    rep.breakdown_time = first
    rep.flags["no_breakdown"] = first is None
    return rep



TIME_EXPONENT_TOL = 0.03
SPATIAL_EXPONENT_TOL = 0.05
ELLIPTIC_EXPONENT_TOL = 0.07
LP_EXPONENT_TOL = 0.05
DEFAULT_TIMES = (16.0, 64.0, 256.0, 1024.0, 4096.0)


def linear_decay_suite(n: int, times=DEFAULT_TIMES, q: float | None = 8.0, data: LinearData | None = None,
                       c_ell: float = ELLIPTIC_CONSTANT) -> dict:
    """All linear decay checks at beta = 0 with their tolerances.

    Returns {check: {"measured", "expected", "tolerance", "passed"}} plus the report.
    """
    data = data or LinearData.gaussian()
    rep = check_linear_decay(data, n, times, (0.0,), c_ell=c_ell)
    out = {}

    def put(name, measured, expected, tol):
        out[name] = {"measured": float(measured), "expected": float(expected), "tolerance": tol,
                     "passed": bool(abs(measured - expected) <= tol)}

    put("time_exponent", rep.time_fit[0.0].slope, -1.0 / n, TIME_EXPONENT_TOL)
    put("spatial_exponent", rep.spatial_fit[0.0].slope, -(n - 2) / (2 * n - 2), SPATIAL_EXPONENT_TOL)
    put("elliptic_exponent", rep.elliptic_fit[0.0].slope, -1.0, ELLIPTIC_EXPONENT_TOL)
    r = rep.sup_ratio[0.0]
    out["sup_ratio_stable"] = {"measured": float(r.max() / r.min()), "expected": 1.0, "tolerance": 2.0,
                               "passed": bool(r.max() <= 2 * r.min())}
    if q is not None and lp_admissible(n, 0.0, q):
        lp = check_lp_decay(data, n, times, 0.0, q)
        put(f"lp_exponent_q{q:g}", lp.fit.slope, lp.predicted, LP_EXPONENT_TOL)
    return {"checks": out, "report": rep}
