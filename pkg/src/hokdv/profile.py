"""Interaction-picture dynamics of f = S(-t) u.

The profile obeys

    d/dt f_hat(xi) = sign (i xi / p) (2 pi)^(1-p) int exp(-i t H) f_hat(xi_1) ... f_hat(xi_p)

with H = xi^n - sum xi_k^n.  Stationary phase around each family of critical
points gives the principal terms

    t^(-(p-1)/2) xi |xi|^(-(p-1)(n-2)/2) c_j exp(-i d_j t xi^n) f_hat(-s)^(j+1) f_hat(s)^(p-j-1),

s = xi / (p-2j-2), active for |xi| > t^(-1/n).  On the time-resonant families
(d_j = 0) c_j is purely imaginary, and the phase B removes their sum.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb

import numpy as np

from .dyadic import freqloc_report, lp_below, lp_piece, orthogonality_bounds  # noqa: F401
from .evolution import SimulationState, Trajectory
from .params import EquationParams
from .resonance import family_indices, hessian_at, is_time_resonant, phase_coefficient, signature, \
    stationary_point
from .spectral import Profile, SpectralField, check_boundary, propagator_symbol, to_profile


class SamplingError(ValueError):
    pass


class HistoryError(ValueError):
    pass


def _state_parts(state):
    if isinstance(state, SimulationState):
        return state.u, state.t, state.params
    u, t, params = state
    return u, float(t), params


def duhamel_rhs(state, dealias: bool = False) -> np.ndarray:
    """d/dt f_hat = exp(-i t xi^n) * sign (i xi / p) F[u^p], evaluated with one FFT.

    ``state`` is a SimulationState or a tuple (u, t, params).  ``dealias``
    applies the two-thirds projection used by the time stepper.
    """
    u, t, prm = _state_parts(state)
    g = u.grid
    up = SpectralField.from_physical(g, u.physical.real**prm.p).fourier
    rhs = prm.sign * 1j * g.xi_odd / prm.p * up
    if dealias:
        rhs = rhs * g.dealias_mask()
    return rhs * np.conj(propagator_symbol(g, t, prm.n))


def duhamel_convolution(profile: Profile, t: float, params: EquationParams, probes) -> np.ndarray:
    """Brute-force (p-1)-fold discrete convolution of f_hat with exp(-i t H), at mode indices ``probes``.

    Frequencies wrap around the grid; every index carries its own signed
    frequency in the phase.  Cost N^(p-1) per probe.
    """
    g = profile.grid
    N = g.count
    p = params.p
    fh = np.asarray(profile.fhat)
    xi = g.xi_odd
    xin = xi.astype(np.longdouble) ** params.n
    out = []
    for m in probes:
        m = int(m) % N
        acc = 0.0 + 0.0j
        # sum over (m_1..m_{p-2}) explicitly and vectorise the last free index
        for head in product(range(N), repeat=p - 2):
            k = np.arange(N)
            last = (m - sum(head) - k) % N
            idx = list(head)
            prod_ = np.full(N, 1.0 + 0.0j)
            phase = np.full(N, -xin[m], dtype=np.longdouble)
            for h in idx:
                prod_ = prod_ * fh[h]
                phase = phase + xin[h]
            prod_ = prod_ * fh[k] * fh[last]
            phase = phase + xin[k] + xin[last]
            ph = np.remainder(t * phase, 2 * np.pi).astype(float)
            acc += np.sum(np.exp(1j * ph) * prod_)
        val = params.sign * 1j * xi[m] / p * (2 * np.pi) ** (1 - p) * g.dxi ** (p - 1) * acc
        out.append(val)
    return np.array(out)


# ------------------------------------------------------------- coefficients


@dataclass(frozen=True)
class Coefficient:
    j: int
    c: complex
    d: float
    signature: int
    determinant: float
    multiplicity: int
    time_resonant: bool


def compute_coefficients(n: int, p: int, sign: int = 1, xi_sign: int = 1) -> dict:
    """c_j and d_j for every stationary family at output frequencies of sign ``xi_sign``.

    c_j = sign (i/p) (2 pi)^(1-p) (2 pi)^((p-1)/2) C(p-1, j) exp(i pi sigma_j / 4)
          (n(n-1))^(-(p-1)/2) |p-2j-2|^((n-2)(p-1)/2 - 1/2),

    where sigma_j is the signature of the Hessian of -H (the phase is -t H) and
    the determinant factor has been split into its xi-dependent and constant parts.
    """
    xi = float(np.sign(xi_sign)) or 1.0
    out = {}
    for j in family_indices(p):
        pt = stationary_point(p, j, xi)
        hess = hessian_at(n, p, xi, pt)
        sig = signature(-hess)
        det = float(abs(np.linalg.det(hess)))
        q = abs(p - 2 * j - 2)
        mult = comb(p - 1, j)
        c = (sign * 1j / p * (2 * np.pi) ** (1 - p) * (2 * np.pi) ** ((p - 1) / 2) * mult
             * np.exp(1j * np.pi * sig / 4) * (n * (n - 1)) ** (-(p - 1) / 2)
             * q ** ((n - 2) * (p - 1) / 2 - 0.5))
        out[j] = Coefficient(j, complex(c), phase_coefficient(n, p, j), sig, det, mult, is_time_resonant(p, j))
    return out


def gauge_constant(n: int, p: int, sign: int = 1) -> float:
    """Real c with i c equal to the sum of the resonant c_j; zero for even p."""
    if p % 2 == 0:
        return 0.0
    co = compute_coefficients(n, p, sign)
    ic = sum(v.c for v in co.values() if v.time_resonant)
    return float(ic.imag)


# ------------------------------------------------------- off-grid profile


def _padded_fourier(profile: Profile, factor: int) -> np.ndarray:
    """f_hat sampled at spacing dxi / factor, by zero-padding f to a box ``factor`` times longer.

    Entry k (FFT order, length factor*N) holds f_hat(2 pi k / (factor L)).
    """
    g = profile.grid
    f = profile.field
    check_boundary(f, what="profile for off-grid evaluation")
    N = g.count
    M = factor * N
    vals = np.zeros(M, dtype=complex)
    start = (factor - 1) * N // 2
    vals[start:start + N] = f.physical
    alt = np.where(np.arange(M) % 2 == 0, 1.0, -1.0)
    # node 0 sits at -factor L / 2
    return g.dx * alt * np.fft.fft(vals)


def profile_at_fraction(profile: Profile, q: int) -> np.ndarray:
    """Array over grid modes m of f_hat(xi_m / q) (q a nonzero integer)."""
    g = profile.grid
    a = abs(q)
    fh = np.asarray(profile.fhat) if a == 1 else _padded_fourier(profile, a)
    M = a * g.count
    idx = (np.sign(q) * g.modes) % M
    return fh[idx]


@dataclass(frozen=True)
class PrincipalTerms:
    t: float
    terms: dict
    coefficients: dict

    @property
    def total(self) -> np.ndarray:
        return sum(self.terms.values())

    def resonant_total(self) -> np.ndarray:
        return sum(v for j, v in self.terms.items() if self.coefficients[j].time_resonant)


def principal_terms(profile: Profile, params: EquationParams, t: float | None = None) -> PrincipalTerms:
    t = profile.t if t is None else float(t)
    if t <= 0:
        raise ValueError("principal terms need t > 0")
    g = profile.grid
    n, p = params.n, params.p
    xi = g.xi_odd
    ind = np.abs(xi) > t ** (-1.0 / n)
    pos = xi > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(ind, xi * np.abs(xi) ** (-(p - 1) * (n - 2) / 2), 0.0)
    weight = weight * t ** (-(p - 1) / 2)
    cpos = compute_coefficients(n, p, params.sign, 1)
    cneg = compute_coefficients(n, p, params.sign, -1)
    terms = {}
    for j in family_indices(p):
        q = p - 2 * j - 2
        fs = profile_at_fraction(profile, q)
        fms = profile_at_fraction(profile, -q)
        c = np.where(pos, cpos[j].c, cneg[j].c)
        d = cpos[j].d
        rot = 1.0 if d == 0 else np.conj(propagator_symbol(g, d * t, n))
        terms[j] = np.where(ind, weight * c * rot * fms ** (j + 1) * fs ** (p - j - 1), 0.0)
    return PrincipalTerms(t, terms, cpos)


def principal_rhs(profile: Profile, params: EquationParams, t: float | None = None) -> np.ndarray:
    """Sum of the principal terms; zero wherever |xi| <= t^(-1/n)."""
    return principal_terms(profile, params, t).total


# -------------------------------------------------------------- residual


@dataclass(frozen=True)
class ResidualReport:
    times: np.ndarray
    xi: np.ndarray
    sup_abs: np.ndarray
    integral: np.ndarray
    eps: float

    @property
    def max_integral(self) -> float:
        return float(self.integral.max())


def sampling_ok(times) -> bool:
    t = np.asarray(times, dtype=float)
    if len(t) < 2:
        return True
    return bool(np.all(np.diff(t) <= np.minimum(1.0, t[:-1] / 20) * (1 + 1e-9)))


def sample_schedule(t0: float, T: float) -> np.ndarray:
    """Sample times with spacing min(1, t/20), landing on T."""
    ts = [float(t0)]
    while ts[-1] < T:
        ts.append(min(T, ts[-1] + min(1.0, ts[-1] / 20)))
    return np.array(ts)


def residual(traj: Trajectory, dealias: bool = True) -> ResidualReport:
    """R = duhamel_rhs - principal_rhs along a run and its per-xi time integral of |R|."""
    if not sampling_ok(traj.times):
        raise SamplingError("sample spacing must not exceed min(1, t/20)")
    Rabs = []
    for i, t in enumerate(traj.times):
        st = traj.state(i)
        f = to_profile(st.u, t, traj.params)
        R = duhamel_rhs(st, dealias=dealias) - principal_rhs(f, traj.params, t)
        Rabs.append(np.abs(R))
    Rabs = np.array(Rabs)
    integ = np.trapezoid(Rabs, traj.times, axis=0) if len(traj) > 1 else np.zeros(traj.grid.count)
    return ResidualReport(np.asarray(traj.times), traj.grid.xi, Rabs.max(axis=0), integ, traj.eps)


# ------------------------------------------------------------ phase B


def compute_B(profile: Profile, params: EquationParams | None = None) -> np.ndarray:
    """B(t, xi) = c xi |xi|^(-(p-1)(n-2)/2) int_1^t |f_hat(s, xi)|^(p-1) s^(-(p-1)/2) ds.

    The integral uses the trapezoid rule over the profile's history, closed
    with the current |f_hat|^(p-1) when the last record predates ``profile.t``.
    """
    p = profile.p if params is None else params.p
    n = profile.n
    sign = 1 if params is None else params.sign
    if p is None:
        raise HistoryError("profile carries no nonlinearity power")
    if not profile.history_times:
        raise HistoryError("phase correction needs a recorded history")
    g = profile.grid
    if p % 2 == 0:
        return np.zeros(g.count)
    c = gauge_constant(n, p, sign)
    ts = list(profile.history_times)
    ws = list(profile.history_weights)
    if profile.t > ts[-1]:
        ts.append(profile.t)
        ws.append(np.abs(profile.fhat) ** (p - 1))
    ts = np.array(ts)
    integrand = np.array(ws) * ts[:, None] ** (-(p - 1) / 2)
    integral = np.trapezoid(integrand, ts, axis=0) if len(ts) > 1 else np.zeros(g.count)
    xi = g.xi_odd
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(xi != 0, xi * np.abs(xi) ** (-(p - 1) * (n - 2) / 2), 0.0)
    return c * w * integral


def renormalized(profile: Profile, params: EquationParams | None = None) -> np.ndarray:
    """w = exp(-i B) f_hat."""
    return np.exp(-1j * compute_B(profile, params)) * np.asarray(profile.fhat)


# ------------------------------------------------------ consistency checks

ORACLE_TOL = 1e-8
FD_ORDER_MIN = 1.8
RESONANT_REAL_TOL = 1e-10
GAUGE_TOL = 4 * np.finfo(float).eps
RESONANT_PAIRS = ((5, 3), (7, 3), (7, 5), (9, 3))


def _gaussian_field(grid, width: float, amp: float):
    from .spectral import SpectralField

    return SpectralField.from_physical(grid, amp * np.exp(-(grid.x / width) ** 2))


def oracle_check(params: EquationParams, rng: np.random.Generator, probes: int = 3, t: float = 1.3) -> dict:
    """duhamel_rhs against the brute-force convolution at ``probes`` random modes."""
    from .spectral import make_grid

    N = 64 if params.p <= 3 else 32
    g = make_grid(10.0 * (N / 32), N)
    u = _gaussian_field(g, 1.0, 0.5)
    idx = rng.choice(np.arange(1, N // 3), size=probes, replace=False)
    f = to_profile(u, t, params)
    fast = duhamel_rhs((u, t, params))[idx]
    slow = duhamel_convolution(f, t, params, idx)
    err = float(np.abs(fast - slow).max() / np.abs(fast).max())
    return {"measured": err, "tolerance": ORACLE_TOL, "passed": err <= ORACLE_TOL,
            "probes": [int(i) for i in idx]}


def fd_order_check(params: EquationParams, tc: float = 2.0, hs=(0.004, 0.002, 0.001), width: float = 2.0,
                   eps: float = 0.3, dt: float = 0.00025) -> dict:
    """Centered differences of the simulated f_hat against duhamel_rhs; order under halving of h."""
    from .evolution import choose_grid, initial_data, run

    g = choose_grid(params, tc + max(hs), width)
    u0 = initial_data(g, params, eps=eps, width=width)
    times = sorted({tc} | {tc + s * h for h in hs for s in (-1, 1)})
    tr = run(params, u0, times[-1], sample_times=times, dt=dt, eps=eps)
    where = {round(float(t), 12): i for i, t in enumerate(tr.times)}

    def fh(t):
        i = where[round(t, 12)]
        return np.asarray(tr.fields[i].fourier) * np.conj(propagator_symbol(g, t, params.n))

    rhs = duhamel_rhs(tr.state(where[round(tc, 12)]), dealias=True)
    errs = [float(np.abs((fh(tc + h) - fh(tc - h)) / (2 * h) - rhs).max()) for h in hs]
    orders = [float(np.log2(a / b)) for a, b in zip(errs, errs[1:])]
    return {"measured": min(orders), "tolerance": FD_ORDER_MIN, "passed": bool(tr.valid and min(orders) >= FD_ORDER_MIN),
            "errors": errs, "orders": orders, "steps": list(hs), "valid": bool(tr.valid)}


def resonant_real_part(pairs=RESONANT_PAIRS) -> dict:
    """Largest |Re c_j| / |c_j| over the time-resonant families of ``pairs``, both output signs."""
    worst = 0.0
    for n, p in pairs:
        for s in (1, -1):
            for c in compute_coefficients(n, p, 1, s).values():
                if c.time_resonant:
                    worst = max(worst, abs(c.c.real) / abs(c.c))
    return {"measured": worst, "tolerance": RESONANT_REAL_TOL, "passed": worst <= RESONANT_REAL_TOL}


def _random_profile(rng, n: int, p: int, t: float = 4.0, samples: int = 5) -> Profile:
    from .spectral import make_grid

    from .spectral import SpectralField

    g = make_grid(40.0, 128)
    x = g.x
    prof = None
    for s in np.linspace(1.0, t, samples):
        c = rng.standard_normal(6)
        f = np.exp(-x**2) * ((c[0] + 1j * c[1]) + (c[2] + 1j * c[3]) * x + (c[4] + 1j * c[5]) * x**2)
        fh = SpectralField.from_physical(g, f).fourier
        prof = Profile(g, float(s), fh, n, p) if prof is None else prof.advance(float(s), fh)
        prof = prof.record()
    return prof


def gauge_checks(params: EquationParams, rng: np.random.Generator) -> dict:
    """|exp(-iB) f_hat| = |f_hat|, principal terms vanish for |xi| <= t^(-1/n), B = 0 for even p."""
    n = params.n
    odd_p = params.p if params.p % 2 else params.p + 1
    f = _random_profile(rng, n, odd_p)
    prm = EquationParams(n, odd_p, params.sign)
    w = renormalized(f, prm)
    a = np.abs(f.fhat)
    gauge = float(np.max(np.abs(np.abs(w) - a) / np.where(a > 0, a, 1.0)))
    out = {"gauge_modulus": {"measured": gauge, "tolerance": GAUGE_TOL, "passed": bool(gauge <= GAUGE_TOL)}}
    low = np.abs(f.grid.xi_odd) <= f.t ** (-1.0 / n)
    ind = float(np.abs(principal_rhs(f, prm)[low]).max()) if low.any() else 0.0
    out["indicator_zero"] = {"measured": ind, "tolerance": 0.0, "passed": ind == 0.0}
    even = _random_profile(rng, n, 2)
    b = float(np.abs(compute_B(even, EquationParams(n, 2, params.sign))).max())
    out["phase_even_p_zero"] = {"measured": b, "tolerance": 0.0, "passed": b == 0.0}
    return out


def profile_checks(params: EquationParams, rng: np.random.Generator | None = None, fd: bool = True) -> dict:
    rng = np.random.default_rng(0) if rng is None else rng
    checks = {"oracle": oracle_check(params, rng), "resonant_real_part": resonant_real_part()}
    checks.update(gauge_checks(params, rng))
    if fd:
        checks["fd_order"] = fd_order_check(params)
    co = compute_coefficients(params.n, params.p, params.sign)
    coeffs = {str(j): {"re": c.c.real, "im": c.c.imag, "d": c.d, "signature": c.signature,
                       "time_resonant": c.time_resonant} for j, c in co.items()}
    return {"params": params.to_dict(), "checks": checks, "coefficients": coeffs,
            "gauge_constant": gauge_constant(params.n, params.p, params.sign)}
