"""Nonlinear time integration, conserved quantities and vector-field diagnostics.

The stepper is integrating-factor RK4: the dispersive phase exp(i t xi^n) is
applied exactly and classical RK4 runs on the interaction-picture nonlinearity

    N(u_hat) = sign * (i xi / p) * P[F(u^p)]

with ``P`` the two-thirds dealiasing projection.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfcinv

from .params import EquationParams
from .smooth import plateau
from .spectral import (
    BOUNDARY_TOL,
    Grid1D,
    SpectralField,
    apply_propagator,
    boundary_mass_fraction,
    check_boundary,
    fractional_derivative,
    linf_fourier,
    make_grid,
    propagator_symbol,
    sobolev_norm,
    to_profile,
    weighted_x_norm,
)

log = logging.getLogger(__name__)

C_CFL = 0.5
TAIL_TOL = 1e-10
# squared target for the 1e-8 agreement of the two y forms
Y_BOUNDARY_TOL = 1e-16
DEFAULT_T0 = 1.0


class SimulationError(RuntimeError):
    pass


class CFLViolation(SimulationError):
    pass


class BlowUpError(SimulationError):
    pass


class InitialDataError(ValueError):
    pass


# ------------------------------------------------------------- initial data


def small_norm(u: SpectralField, params: EquationParams, check: bool = True) -> float:
    """||u||_{H^k} + ||x u||_2, k = (n-1)/2: the size of admissible initial data."""
    return sobolev_norm(u, params.k) + weighted_x_norm(u, check=check)


def gaussian_spectrum(width: float, center: float = 0.0, bandlimit=None):
    """Fourier transform of exp(-(x-center)^2/width^2), optionally band-limited.

    ``bandlimit = (xi_lo, xi_hi)`` multiplies by a C-infinity cutoff equal to 1 on
    |xi| <= xi_lo and 0 on |xi| >= xi_hi.
    """

    def fhat(xi):
        xi = np.asarray(xi, dtype=float)
        g = width * np.sqrt(np.pi) * np.exp(-(xi * width) ** 2 / 4) * np.exp(-1j * center * xi)
        if bandlimit is not None:
            g = g * plateau(xi, *bandlimit)
        return g

    return fhat


def spectral_tail(field_: SpectralField) -> float:
    """L2 fraction of u_hat above |m| = N/4 (the top of the retained two-thirds band)."""
    uh = field_.fourier
    tot = np.sqrt(np.sum(np.abs(uh) ** 2))
    if tot == 0:
        return 0.0
    hi = np.abs(field_.grid.modes) > field_.grid.count // 4
    return float(np.sqrt(np.sum(np.abs(uh[hi]) ** 2)) / tot)


def initial_data(
    grid: Grid1D,
    params: EquationParams,
    kind: str = "gaussian",
    eps: float = 0.1,
    center: float = 0.0,
    width: float = 1.0,
    func=None,
    bandlimit=None,
    allow_large: bool = False,
) -> SpectralField:
    """Initial datum rescaled so that ||u0||_{H^k} + ||x u0||_2 = eps.

    ``kind`` is ``gaussian``, ``sech`` or ``custom`` (``func`` maps x to values).
    ``allow_large`` lifts the eps <= 0.5 cap for breakdown demonstrations.
    """
    if eps < 0 or (eps > 0.5 and not allow_large):
        raise InitialDataError(f"eps must lie in [0, 0.5], got {eps}")
    if eps == 0:
        return SpectralField.zeros(grid)
    if width <= 0:
        raise InitialDataError("width must be positive")
    x = grid.x
    if kind == "gaussian":
        if bandlimit is None:
            shape = SpectralField.from_physical(grid, np.exp(-(((x - center) / width) ** 2)))
        else:
            shape = SpectralField.from_fourier(grid, gaussian_spectrum(width, center, bandlimit)(grid.xi))
    elif kind == "sech":
        shape = SpectralField.from_physical(grid, 1.0 / np.cosh((x - center) / width))
    elif kind == "custom":
        if func is None:
            raise InitialDataError("custom initial data needs func")
        shape = SpectralField.from_physical(grid, func(x))
    else:
        raise InitialDataError(f"unknown initial data kind {kind!r}")
    if spectral_tail(shape) > TAIL_TOL:
        raise InitialDataError(f"width {width} is not resolved on this grid (spectral tail {spectral_tail(shape):.2e})")
    try:
        check_boundary(shape, what="initial data")
    except Exception as e:
        raise InitialDataError(str(e)) from e
    return (eps / small_norm(shape, params)) * shape


def choose_grid(
    params: EquationParams,
    horizon: float,
    width: float,
    center: float = 0.0,
    bandlimit=None,
    tol: float = BOUNDARY_TOL,
    dealias: bool = True,
    min_count: int = 256,
    xi_speed: float | None = None,
    xi_resolve: float | None = None,
) -> Grid1D:
    """Box and resolution for a Gaussian of ``width`` evolved over ``horizon``.

    The box is sized so that the fastest frequency carrying more than ``tol`` of
    the mass travels less than L/4; the resolution puts the N/4 mode, where the
    tail monitor starts, beyond the point where the spectrum drops below 1e-10.
    ``dealias`` is accepted for symmetry with the stepper; the N/4 placement
    already lies inside the two-thirds band.  ``xi_speed`` and ``xi_resolve`` override the
    frequency that sets the box and the one placed at the N/4 mode (where the
    tail monitor starts); nonlinear runs use them to cover generated harmonics.
    """
    xi_mass = np.sqrt(2.0) * erfcinv(tol) / width
    # the Gaussian spectrum is below 1e-10 of its peak past 10 / width
    xi_tail = 10.0 / width
    if bandlimit is not None:
        xi_mass = min(xi_mass, bandlimit[1])
        xi_tail = min(xi_tail, bandlimit[1])
    if xi_speed is not None:
        xi_mass = xi_speed
    speed = params.n * xi_mass ** (params.n - 1)
    L = 4 * speed * max(horizon, 0.0) + 2 * (abs(center) + 12 * width)
    if xi_resolve is None:
        xi_resolve = xi_tail
    # N/4 mode at xi_resolve
    N = max(min_count, int(2 ** np.ceil(np.log2(2 * L * xi_resolve / np.pi))))
    return make_grid(L, N)


# ---------------------------------------------------------- conserved parts


def mass(u) -> float:
    """M = int u^2 dx."""
    f = u.u if isinstance(u, SimulationState) else u
    return float(f.grid.dx * np.sum(np.abs(f.physical) ** 2))


def hamiltonian(u, params: EquationParams | None = None) -> float:
    """E = int (d_x^k u)^2 / 2 + sign * u^(p+1) / (p (p+1)) dx.

    The 1/p in the potential matches the nonlinearity u^(p-1) u_x = d_x(u^p)/p;
    with 1/(p+1) alone the functional is not conserved.
    """
    if isinstance(u, SimulationState):
        params = u.params
        u = u.u
    g = u.grid
    k, p = params.k, params.p
    kinetic = 0.5 * g.dxi / (2 * np.pi) * np.sum(np.abs(g.xi) ** (2 * k) * np.abs(u.fourier) ** 2)
    potential = params.sign * g.dx * np.sum(u.physical.real ** (p + 1)) / (p * (p + 1))
    return float(kinetic + potential)


@dataclass(frozen=True)
class InvariantLedger:
    times: tuple = ()
    mass: tuple = ()
    hamiltonian: tuple = ()

    def append(self, t: float, m: float, h: float) -> "InvariantLedger":
        return InvariantLedger(self.times + (t,), self.mass + (m,), self.hamiltonian + (h,))

    @staticmethod
    def _drift(series) -> float:
        s = np.asarray(series)
        if len(s) == 0 or s[0] == 0:
            return float(np.abs(s - (s[0] if len(s) else 0)).max()) if len(s) else 0.0
        return float(np.abs(s - s[0]).max() / abs(s[0]))

    def mass_drift(self) -> float:
        return self._drift(self.mass)

    def hamiltonian_drift(self) -> float:
        return self._drift(self.hamiltonian)


# ------------------------------------------------------------------ stepper


class Nonlinearity:
    """sign * (i xi / p) P[F(u^p)] on a fixed grid, acting on Fourier arrays."""

    def __init__(self, grid: Grid1D, params: EquationParams, dealias: bool = True, enabled: bool = True):
        self.grid = grid
        self.p = params.p
        mask = grid.dealias_mask() if dealias else np.ones(grid.count, bool)
        self.mask = mask
        # fold transform weights into one symbol
        self._coef = params.sign * 1j * grid.xi_odd / params.p * mask * grid._alternating * grid.dx
        self._alt_over_dx = grid._alternating / grid.dx
        self.enabled = enabled
        self.last_umax = 0.0

    def physical(self, uh: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self._alt_over_dx * uh)

    def __call__(self, uh: np.ndarray) -> np.ndarray:
        if not self.enabled:
            self.last_umax = float(np.abs(self.physical(uh)).max())
            return np.zeros_like(uh)
        u = self.physical(uh)
        self.last_umax = float(np.abs(u).max())
        return self._coef * np.fft.fft(u**self.p)


class IFRK4:
    """Integrating-factor RK4 for a fixed grid and equation; caches phase factors per dt."""

    def __init__(self, grid: Grid1D, params: EquationParams, dealias: bool = True, nonlinear: bool = True):
        self.grid = grid
        self.params = params
        self.N = Nonlinearity(grid, params, dealias=dealias, enabled=nonlinear)
        self._cache: dict = {}

    def _phases(self, dt: float):
        E = self._cache.get(dt)
        if E is None:
            E2 = propagator_symbol(self.grid, dt / 2, self.params.n)
            E = (E2, E2 * E2)
            if len(self._cache) > 16:
                self._cache.clear()
            self._cache[dt] = E
        return E

    def dt_max(self, umax: float) -> float:
        q = umax ** (self.params.p - 1)
        return np.inf if q == 0 else C_CFL * self.grid.dx / q

    def step(self, v: np.ndarray, dt: float) -> np.ndarray:
        E2, E = self._phases(dt)
        N = self.N
        k1 = N(v)
        if N.enabled and abs(dt) > self.dt_max(N.last_umax) * (1 + 1e-12):
            raise CFLViolation(f"dt={dt:.3e} exceeds CFL limit {self.dt_max(N.last_umax):.3e}")
        if not N.enabled:
            out = E * v
        else:
            k2 = N(E2 * (v + 0.5 * dt * k1))
            k3 = N(E2 * v + 0.5 * dt * k2)
            k4 = N(E * v + dt * E2 * k3)
            out = E * v + dt / 6 * (E * k1 + 2 * E2 * (k2 + k3) + k4)
        if not np.all(np.isfinite(out)):
            raise BlowUpError("non-finite values after step")
        return out


@dataclass(frozen=True)
class SimulationState:
    params: EquationParams
    t: float
    u: SpectralField
    eps: float = 0.0
    dt: float = 0.0
    steps: int = 0
    diagnostics: tuple = field(default=(), repr=False)
    t0: float = DEFAULT_T0

    @property
    def grid(self) -> Grid1D:
        return self.u.grid


_DIAG_RING = 64


def step(state: SimulationState, dt: float, nonlinear: bool = True, _stepper: IFRK4 | None = None) -> SimulationState:
    """Advance one IFRK4 step; the state's field must already be dealiased."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    st = _stepper or IFRK4(state.grid, state.params, nonlinear=nonlinear and state.params is not None)
    v = st.step(np.asarray(state.u.fourier), dt)
    u = SpectralField.from_fourier(state.grid, v)
    ring = deque(state.diagnostics, maxlen=_DIAG_RING)
    ring.append({"t": state.t + dt, "mass": mass(u)})
    return replace(state, t=state.t + dt, u=u, dt=dt, steps=state.steps + 1, diagnostics=tuple(ring))


def dealias(u: SpectralField) -> SpectralField:
    return SpectralField.from_fourier(u.grid, u.fourier * u.grid.dealias_mask())


@dataclass
class Trajectory:
    """Samples of one run.  Fields are stored in Fourier form."""

    params: EquationParams
    grid: Grid1D
    times: np.ndarray
    fields: list
    ledger: InvariantLedger
    boundary: np.ndarray
    tail: np.ndarray
    eps: float = 0.0
    dt: float = 0.0
    steps: int = 0
    valid: bool = True
    notes: list = field(default_factory=list)
    stopped_at: float | None = None

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> SimulationState:
        return SimulationState(self.params, float(self.times[i]), self.fields[i], self.eps, self.dt, 0, (), float(self.times[0]))

    def profile(self, i: int):
        return to_profile(self.fields[i], float(self.times[i]), self.params)

    def profiles(self, with_history: bool = True) -> list:
        """Profiles at all samples; each carries the |f_hat|^(p-1) history up to its time."""
        out = []
        prev = None
        for i in range(len(self)):
            f = self.profile(i)
            if with_history and prev is not None:
                f = prev.advance(f.t, f.fhat)
            if with_history:
                f = f.record()
            out.append(f)
            prev = f
        return out

    @property
    def final(self) -> SpectralField:
        return self.fields[-1]


def run(
    params: EquationParams,
    u0: SpectralField,
    T: float,
    sample_times=None,
    t0: float = DEFAULT_T0,
    dt: float | None = None,
    nonlinear: bool = True,
    eps: float = 0.0,
    dt_default: float = 0.1,
    strict_boundary: bool = False,
    stop=None,
) -> Trajectory:
    """Integrate from ``t0`` to ``T`` and record samples.

    Every requested sample time in [t0, T] is hit exactly by shortening the
    steps that lead to it.  ``dt`` defaults to min(dt_default, CFL limit at t0).
    A boundary-mass breach marks the trajectory invalid (or raises with
    ``strict_boundary``).  ``stop(t, field)`` is called at every sample; a
    true result ends the run there and sets ``stopped_at``.
    """
    if T < t0:
        raise ValueError("T must be >= t0")
    grid = u0.grid
    samples = sorted({float(t0), float(T)} | {float(s) for s in ([] if sample_times is None else sample_times) if t0 <= s <= T})
    st = IFRK4(grid, params, nonlinear=nonlinear)
    mask = grid.dealias_mask()
    v = np.asarray(u0.fourier) * mask
    if nonlinear:
        umax0 = float(np.abs(st.N.physical(v)).max())
        cfl = st.dt_max(umax0)
    else:
        cfl = np.inf
    if dt is None:
        dt = min(dt_default, 0.9 * cfl)
    elif dt > cfl:
        raise CFLViolation(f"dt={dt:.3e} exceeds CFL limit {cfl:.3e}")

    traj = Trajectory(params, grid, np.array(samples), [], InvariantLedger(), np.zeros(len(samples)),
                      np.zeros(len(samples)), eps=eps, dt=dt)

    def record(i, t, vv):
        u = SpectralField.from_fourier(grid, vv.copy())
        traj.fields.append(u)
        traj.ledger = traj.ledger.append(t, mass(u), hamiltonian(u, params))
        b = boundary_mass_fraction(u)
        traj.boundary[i] = b
        traj.tail[i] = spectral_tail(u)
        if b > BOUNDARY_TOL and traj.valid:
            traj.valid = False
            msg = f"boundary mass {b:.2e} at t={t:.4g} exceeds {BOUNDARY_TOL:.0e}"
            traj.notes.append(msg)
            log.warning(msg)
            if strict_boundary:
                from .spectral import BoundaryMassError

                raise BoundaryMassError(msg)

    record(0, samples[0], v)
    t = samples[0]
    for i, ts in enumerate(samples[1:], start=1):
        gap = ts - t
        k = max(1, int(np.ceil(gap / dt - 1e-9)))
        h = gap / k
        for _ in range(k):
            v = st.step(v, h)
            traj.steps += 1
        t = ts
        record(i, t, v)
        if stop is not None and i < len(samples) - 1 and stop(t, traj.fields[-1]):
            traj.times = traj.times[: i + 1]
            traj.boundary = traj.boundary[: i + 1]
            traj.tail = traj.tail[: i + 1]
            traj.stopped_at = t
            break
    return traj


# ------------------------------------------------------- vector field y, X


def _nonlinear_power(u: SpectralField, p: int) -> SpectralField:
    return SpectralField.from_physical(u.grid, u.physical.real**p)


def _y_parts(state: SimulationState, linear: bool):
    u, t, prm = state.u, state.t, state.params
    n, p = prm.n, prm.p
    check_boundary(u, what="vector field y")
    g = u.grid
    f = apply_propagator(u, -t, n)
    check_boundary(f, what="profile for y")
    y1 = apply_propagator(SpectralField.from_physical(g, g.x * f.physical), t, n)
    extra = None
    if not linear and t != 0:
        extra = (n / p * t) * _nonlinear_power(u, p)
    return y1, extra


def vector_field_y_forms(state: SimulationState, linear: bool = False, tol: float = Y_BOUNDARY_TOL):
    """Both expressions for y; returns (via S(t)(x f), via x u + n t d_x^(n-1) u).

    The derivative form carries the sign (-1)^((n-1)/2) that makes it equal to
    S(t)(x f) under the propagator exp(i t xi^n).  Its weights amplify any
    wrapped high-frequency tail, so each form must keep its own boundary mass
    below ``tol``; the relative gap between them is roughly sqrt(that mass).
    """
    y1, extra = _y_parts(state, linear)
    u, t, n = state.u, state.t, state.params.n
    g = u.grid
    xu = SpectralField.from_physical(g, g.x * u.physical)
    y2 = xu + ((-1) ** ((n - 1) // 2) * n * t) * fractional_derivative(u, n - 1, kind="int")
    if extra is not None:
        y1 = y1 + extra
        y2 = y2 + extra
    check_boundary(y1, tol=tol, what="y (propagated form)")
    check_boundary(y2, tol=tol, what="y (derivative form)")
    return y1, y2


def vector_field_y(state: SimulationState, linear: bool = False, tol: float = BOUNDARY_TOL) -> SpectralField:
    """y = S(t)(x f) + (n/p) t u^p.

    Only the propagated form is built, so the ordinary boundary tolerance
    applies; the stricter Y_BOUNDARY_TOL is for comparing the two forms.
    """
    y1, extra = _y_parts(state, linear)
    if extra is not None:
        y1 = y1 + extra
    check_boundary(y1, tol=tol, what="y")
    return y1


def x_norm(state: SimulationState, check: bool = True) -> float:
    """||u||_{H^k} + t^(-1/(2n)) ||x f||_2 + ||f_hat||_inf."""
    u, t, prm = state.u, state.t, state.params
    if t <= 0:
        raise ValueError("the X-norm is defined for t > 0")
    f = apply_propagator(u, -t, prm.n)
    return (sobolev_norm(u, prm.k) + t ** (-1.0 / (2 * prm.n)) * weighted_x_norm(f, check=check)
            + linf_fourier(u))


def initial_state(params: EquationParams, u0: SpectralField, eps: float = 0.0, t0: float = DEFAULT_T0) -> SimulationState:
    return SimulationState(params, float(t0), dealias(u0), eps=eps, t0=float(t0))


# -------------------------------------------------------------- checkpoints

CHECKPOINT_VERSION = 1


def save_trajectory(traj: Trajectory, path) -> None:
    """Write ``path``.json (metadata) and ``path``.bin (little-endian float64).

    The binary block holds, per sample, Re and Im of u_hat interleaved.
    """
    import json
    from pathlib import Path

    path = Path(path)
    meta = {
        "format": "hokdv-trajectory",
        "version": CHECKPOINT_VERSION,
        "params": traj.params.to_dict(),
        "grid": traj.grid.to_dict(),
        "times": [float(t) for t in traj.times],
        "mass": list(traj.ledger.mass),
        "hamiltonian": list(traj.ledger.hamiltonian),
        "boundary": [float(b) for b in traj.boundary],
        "tail": [float(b) for b in traj.tail],
        "eps": traj.eps,
        "dt": traj.dt,
        "steps": traj.steps,
        "valid": traj.valid,
        "notes": list(traj.notes),
        "stopped_at": traj.stopped_at,
        "dtype": "<f8",
        "layout": "sample, mode, (re, im)",
    }
    data = np.stack([np.asarray(f.fourier) for f in traj.fields]).view(np.float64)
    path.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    data.astype("<f8").tofile(path.with_suffix(".bin"))


def load_trajectory(path) -> Trajectory:
    import json
    from pathlib import Path

    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("format") != "hokdv-trajectory" or meta.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint format {meta.get('format')!r} v{meta.get('version')}")
    grid = make_grid(meta["grid"]["length"], meta["grid"]["count"])
    raw = np.fromfile(path.with_suffix(".bin"), dtype="<f8")
    ns = len(meta["times"])
    if raw.size != ns * grid.count * 2:
        raise ValueError("checkpoint data size does not match metadata")
    uh = raw.reshape(ns, grid.count * 2).view(np.complex128)
    fields = [SpectralField.from_fourier(grid, row.copy()) for row in uh]
    ledger = InvariantLedger(tuple(meta["times"]), tuple(meta["mass"]), tuple(meta["hamiltonian"]))
    return Trajectory(EquationParams.from_dict(meta["params"]), grid, np.array(meta["times"]), fields, ledger,
                      np.array(meta["boundary"]), np.array(meta["tail"]), eps=meta["eps"], dt=meta["dt"],
                      steps=meta["steps"], valid=meta["valid"], notes=list(meta["notes"]),
                      stopped_at=meta.get("stopped_at"))


__all__ = [
    "BlowUpError", "CFLViolation", "IFRK4", "InitialDataError", "InvariantLedger", "Nonlinearity",
    "SimulationState", "Trajectory", "choose_grid", "dealias", "gaussian_spectrum", "hamiltonian",
    "initial_data", "initial_state", "mass", "run", "small_norm", "spectral_tail", "step",
    "vector_field_y", "vector_field_y_forms", "x_norm", "save_trajectory", "load_trajectory",
]
