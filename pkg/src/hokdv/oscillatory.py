"""Stationary-phase asymptotics, a panel-quadrature oracle and a discrete
pseudo-product bound.

Integrals have the form  I(lam) = int_{R^d} exp(i lam psi(eta)) F(eta) chi(eta) d eta
with chi supported in the ball of radius 2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .resonance import signature
from .smooth import bump

GL_NODES = 20
OSC_PER_PANEL = 2.0
MAX_POINTS = {1: 2_000_000, 2: 40_000_000}
_CHUNK = 2_000_000


class CostGuardError(RuntimeError):
    pass


class DegenerateHessianError(ArithmeticError):
    pass


BUMP = "bump"


@dataclass(frozen=True)
class PhaseSpec:
    """Phase psi, amplitude F and cutoff chi on R^d, evaluated at points of shape (..., d).

    ``chi`` defaults to the radial bump of radius 2 (equal to 1 at the origin);
    ``chi=None`` means a sharp cutoff: the integral runs over the cube [-box, box]^d.
    ``grad_bound`` bounds |d psi / d eta_i| on the cube and sets the panel density.
    """

    d: int
    psi: Callable
    F: Callable
    lam: float
    hess: Optional[Callable] = None
    eta0: Optional[tuple] = None
    chi: object = BUMP
    box: float = 2.0
    grad_bound: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.eta0 is not None:
            if self.hess is None:
                raise ValueError("a stationary point needs a Hessian")
            if abs(np.linalg.det(self.hessian_at_eta0())) == 0:
                raise DegenerateHessianError("Hessian vanishes at the stationary point")

    def with_lam(self, lam: float) -> "PhaseSpec":
        return replace(self, lam=float(lam))

    def hessian_at_eta0(self) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.hess(np.asarray(self.eta0, dtype=float)), dtype=float))

    def radius(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.abs(pts) if self.d == 1 else np.linalg.norm(pts, axis=-1)

    def cutoff(self, pts) -> np.ndarray:
        if self.chi is None:
            return np.ones_like(self.radius(pts))
        if isinstance(self.chi, str) and self.chi == BUMP:
            return bump(self.radius(pts), 2.0)
        return self.chi(pts)

    def amplitude(self, pts) -> np.ndarray:
        return self.F(pts) * self.cutoff(pts)


@dataclass(frozen=True)
class OscIntegralResult:
    value: complex
    method: str
    error: float = 0.0
    signature: Optional[int] = None
    determinant: Optional[float] = None
    panels: Optional[int] = None

    def __post_init__(self):
        if not self.error >= 0:
            raise ValueError("error estimate must be nonnegative")

    def to_dict(self) -> dict:
        return {"re": float(np.real(self.value)), "im": float(np.imag(self.value)), "method": self.method,
                "error": self.error, "signature": self.signature, "determinant": self.determinant,
                "panels": self.panels}


def _point(spec: PhaseSpec, eta):
    eta = np.asarray(eta, dtype=float)
    return eta[:1] if spec.d == 1 else eta.reshape(1, spec.d)


def stationary_phase_leading(spec: PhaseSpec) -> OscIntegralResult:
    """(2 pi / lam)^(d/2) exp(i pi s / 4) Delta^(-1/2) exp(i lam psi(eta0)) F(eta0) chi(eta0)."""
    if spec.eta0 is None:
        raise ValueError("leading term needs a stationary point")
    h = spec.hessian_at_eta0()
    try:
        s = signature(h)
    except ArithmeticError as e:
        raise DegenerateHessianError(str(e)) from e
    delta = float(abs(np.linalg.det(h)))
    e0 = _point(spec, spec.eta0)
    amp = complex(np.ravel(spec.amplitude(e0))[0])
    ph = float(np.ravel(spec.psi(e0))[0])
    lam = spec.lam
    val = (2 * np.pi / lam) ** (spec.d / 2) * np.exp(1j * np.pi * s / 4) / np.sqrt(delta) \
        * np.exp(1j * lam * ph) * amp
    return OscIntegralResult(complex(val), "leading-term", 0.0, int(s), delta)


def _gl_rule(a: float, b: float, panels: int, nodes: int = GL_NODES):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def panel_count(spec: PhaseSpec) -> int:
    """Panels per axis: at most OSC_PER_PANEL oscillations of exp(i lam psi) per panel."""
    osc = abs(spec.lam) * spec.grad_bound * 2 * spec.box / (2 * np.pi)
    return max(4, int(np.ceil(osc / OSC_PER_PANEL)))


def _quad(spec: PhaseSpec, panels: int) -> complex:
    pts, wts = _gl_rule(-spec.box, spec.box, panels)
    total_pts = pts.size ** spec.d
    if total_pts > MAX_POINTS[min(spec.d, 2)] * (1 if spec.d < 3 else 0.05):
        raise CostGuardError(f"{total_pts} quadrature points exceed the budget for d={spec.d}; lower lam")
    lam = spec.lam
    if spec.d == 1:
        return complex(np.sum(wts * np.exp(1j * lam * spec.psi(pts)) * spec.amplitude(pts)))
    # tensor product, evaluated in slabs along the first axis
    rest = np.stack(np.meshgrid(*([pts] * (spec.d - 1)), indexing="ij"), axis=-1).reshape(-1, spec.d - 1)
    wrest = np.prod(np.stack(np.meshgrid(*([wts] * (spec.d - 1)), indexing="ij"), axis=-1).reshape(-1, spec.d - 1),
                    axis=1)
    rows = max(1, _CHUNK // rest.shape[0])
    acc = 0.0 + 0.0j
    for i0 in range(0, pts.size, rows):
        p1 = pts[i0:i0 + rows]
        w1 = wts[i0:i0 + rows]
        grid = np.concatenate([np.repeat(p1, rest.shape[0])[:, None], np.tile(rest, (p1.size, 1))], axis=1)
        w = np.repeat(w1, rest.shape[0]) * np.tile(wrest, p1.size)
        acc += np.sum(w * np.exp(1j * lam * spec.psi(grid)) * spec.amplitude(grid))
    return complex(acc)


def oscillatory_quadrature(spec: PhaseSpec, panels: Optional[int] = None) -> OscIntegralResult:
    """Gauss-Legendre panel quadrature; the error estimate is the change under panel doubling."""
    m = panel_count(spec) if panels is None else int(panels)
    coarse = _quad(spec, m)
    fine = _quad(spec, 2 * m)
    return OscIntegralResult(fine, "quadrature", float(abs(fine - coarse)), panels=2 * m)


def loglog_slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class OrderProbe:
    lams: tuple
    magnitudes: tuple
    slope: float
    mode: str
    floor: tuple = field(default=())

    @property
    def order(self) -> float:
        return -self.slope


def error_order_probe(spec: PhaseSpec, lams, mode: str = "remainder") -> OrderProbe:
    """Least-squares slope of log|I - leading| (``remainder``) or log|I| (``nonstationary``) vs log lam."""
    lams = [float(v) for v in lams]
    if len(lams) < 4:
        raise ValueError("need at least four values of lam")
    ratios = np.array(lams[1:]) / np.array(lams[:-1])
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("lam values must form a geometric progression")
    mags, floors = [], []
    for lam in lams:
        s = spec.with_lam(lam)
        q = oscillatory_quadrature(s)
        if mode == "remainder":
            mags.append(abs(q.value - stationary_phase_leading(s).value))
        elif mode == "nonstationary":
            mags.append(abs(q.value))
        else:
            raise ValueError(f"unknown probe mode {mode!r}")
        floors.append(q.error)
    return OrderProbe(tuple(lams), tuple(mags), loglog_slope(lams, mags), mode, tuple(floors))


# ------------------------------------------------------------------ corpus


def _gauss_amp(c):
    def F(eta):
        eta = np.asarray(eta, dtype=float)
        r2 = eta**2 if eta.ndim <= 1 else np.sum(eta**2, axis=-1)
        return np.exp(-c * r2) * (1 + 0.3 * (eta if eta.ndim <= 1 else eta[..., 0]))
    return F


def corpus(lam: float = 100.0) -> list:
    """Smooth stationary-phase test cases in d = 1 and 2."""
    one = lambda eta: np.ones(np.shape(eta)[:-1] if np.ndim(eta) > 1 else np.shape(eta))  # noqa: E731
    return [
        PhaseSpec(1, lambda e: 0.5 * e**2, one, lam, hess=lambda e: np.array([[1.0]]), eta0=(0.0,),
                  grad_bound=2.0, name="fresnel-1d"),
        PhaseSpec(1, lambda e: np.cos(e) - 1, _gauss_amp(0.5), lam, hess=lambda e: np.array([[-1.0]]),
                  eta0=(0.0,), grad_bound=1.0, name="cos-1d"),
        PhaseSpec(1, lambda e: e**2 / 2 + e**3 / 6, _gauss_amp(0.25), lam, hess=lambda e: np.array([[1.0]]),
                  eta0=(0.0,), grad_bound=4.0, name="cubic-1d"),
        PhaseSpec(2, lambda e: 0.5 * (e[..., 0] ** 2 + e[..., 1] ** 2), one, lam, hess=lambda e: np.eye(2),
                  eta0=(0.0, 0.0), grad_bound=2.0, name="elliptic-2d"),
        PhaseSpec(2, lambda e: 0.5 * (e[..., 0] ** 2 - e[..., 1] ** 2), _gauss_amp(0.5), lam,
                  hess=lambda e: np.diag([1.0, -1.0]), eta0=(0.0, 0.0), grad_bound=2.0, name="saddle-2d"),
    ]


# ---------------------------------------------------------- pseudo-products


@dataclass(frozen=True)
class PseudoProductReport:
    lhs: float
    kernel_l1: float
    norm_product: float
    exponents: tuple
    lhs_physical: float

    @property
    def ratio(self) -> float:
        bound = self.kernel_l1 * self.norm_product
        return 0.0 if self.lhs == 0 else self.lhs / bound

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "kernel_l1": self.kernel_l1, "norm_product": self.norm_product,
                "exponents": list(self.exponents), "ratio": self.ratio, "lhs_physical": self.lhs_physical}


# the discrete inequality holds with constant exactly 1 (Young + Hoelder on the torus)
PSEUDO_PRODUCT_CONSTANT = 1.0


def _signed_freqs(M: int, dxi: float) -> np.ndarray:
    return np.fft.fftfreq(M, d=1.0 / M) * dxi


def pseudo_product_check(m, fs, exponents, dx: float = 0.25) -> PseudoProductReport:
    """Both sides of the pseudo-product bound on a periodic lattice.

    ``fs`` holds d+1 real or complex arrays of common length M (samples with
    spacing ``dx``); ``m`` is a callable on d frequency arrays or an array of
    shape (M,)*d in FFT order.  The left side is

        | dxi^d sum_eta m(eta) prod_j f_j^(eta_j) f_{d+1}^(-sum eta) |

    with wrap-around indices; the kernel norm is ||K||_1 with
    K(z) = dxi^d sum_eta m(eta) exp(i eta.z).
    """
    fs = [np.asarray(f) for f in fs]
    d = len(fs) - 1
    if d < 1 or d > 3:
        raise ValueError("need between 2 and 4 functions")
    if len(exponents) != d + 1:
        raise ValueError("one exponent per function")
    if abs(sum(0.0 if np.isinf(q) else 1.0 / q for q in exponents) - 1) > 1e-12 or min(exponents) < 1:
        raise ValueError("exponents must lie in [1, inf] with reciprocals summing to 1")
    M = fs[0].size
    if any(f.size != M for f in fs):
        raise ValueError("functions must share one grid")
    dxi = 2 * np.pi / (M * dx)
    freqs = _signed_freqs(M, dxi)
    if callable(m):
        mm = np.asarray(m(*np.meshgrid(*([freqs] * d), indexing="ij")), dtype=complex)
    else:
        mm = np.asarray(m, dtype=complex)
    if mm.shape != (M,) * d:
        raise ValueError("symbol shape does not match the lattice")
    fh = [dx * np.fft.fft(f) for f in fs]
    idx = np.meshgrid(*([np.arange(M)] * d), indexing="ij")
    prod = mm.copy()
    for j in range(d):
        prod = prod * fh[j][idx[j]]
    prod = prod * fh[d][(-sum(idx)) % M]
    lhs = abs(dxi**d * prod.sum())
    K = dxi**d * M**d * np.fft.ifftn(mm)
    kl1 = float(dx**d * np.abs(K).sum())
    norms_ = 1.0
    for f, q in zip(fs, exponents):
        a = np.abs(f)
        norms_ *= a.max() if np.isinf(q) else (dx * np.sum(a**q)) ** (1.0 / q)
    # physical-side evaluation: dx^(d+1) sum_y f_{d+1}(y) sum_z K(z) prod_j f_j(y - z_j)
    lhs_phys = abs(_physical_side(K, fs, dx))
    return PseudoProductReport(float(lhs), kl1, float(norms_), tuple(exponents), float(lhs_phys))


def _physical_side(K, fs, dx):
    d = len(fs) - 1
    M = fs[0].size
    # sum_z K(z) prod_j f_j(y - z_j) for each y, by brute force
    total = 0.0 + 0.0j
    for y in range(M):
        tens = np.ones((M,) * d, dtype=complex)
        for j in range(d):
            shp = [1] * d
            shp[j] = M
            tens = tens * fs[j][(y - np.arange(M)) % M].reshape(shp)
        total += fs[d][y] * np.sum(K * tens)
    return dx ** (d + 1) * total


def multiplier_kernel_l1(m, d: int, M: int = 128, box: float = 8.0) -> float:
    """||int m(eta) exp(i x.eta) d eta||_{L^1_x} on a periodic lattice of M^d frequencies in [-box, box)^d."""
    dxi = 2 * box / M
    freqs = _signed_freqs(M, dxi)
    mm = np.asarray(m(*np.meshgrid(*([freqs] * d), indexing="ij")), dtype=complex)
    dx = 2 * np.pi / (M * dxi)
    K = dxi**d * M**d * np.fft.ifftn(mm)
    return float(dx**d * np.abs(K).sum())


def derivative_multiplier_probe(n: int, ks=(0, 1, 2, 3), xi: float = 0.0, small: float = 0.125, M: int = 256):
    """Optional probe of the kernel bound for m = psi(2^-k xi_1) chi(2^-k xi_2 / small) / d_2 H at p = 3.

    Returns (ks, kernel L1 norms, fitted log2-slope); the expected slope is -(n-1).
    """
    from .smooth import plateau

    def lp(r):
        r = np.abs(r)
        return plateau(r, 1.0, 2.0) - plateau(2 * r, 1.0, 2.0)

    vals = []
    for k in ks:
        s = 2.0**k

        def m(e1, e2, s=s):
            xp = xi - e1 - e2
            d2h = -n * e2 ** (n - 1) + n * xp ** (n - 1)
            num = lp(e1 / s) * plateau(e2 / (s * small), 1.0, 2.0)
            out = np.zeros_like(num, dtype=float)
            nz = num != 0
            out[nz] = num[nz] / d2h[nz]
            return out

        vals.append(multiplier_kernel_l1(m, 2, M=M, box=4.0 * s))
    slope = float(np.polyfit(np.asarray(ks, float), np.log2(vals), 1)[0])
    return tuple(ks), tuple(vals), slope


LAMS_1D = (25.0, 50.0, 100.0, 200.0, 400.0)
LAMS_2D = (25.0, 50.0, 100.0, 200.0)
ORDER_TOLERANCE = 0.15


def corpus_check(lams_1d=LAMS_1D, lams_2d=LAMS_2D, fresnel_lam: float = 400.0) -> dict:
    """Remainder order of every corpus case against d/2 + 1 and the d=1 Fresnel value.

    A case passes when its fitted order is at least d/2 + 1 - ORDER_TOLERANCE.
    """
    rows = []
    for spec in corpus():
        lams = lams_1d if spec.d == 1 else lams_2d
        pr = error_order_probe(spec, lams)
        target = spec.d / 2 + 1
        rows.append({"name": spec.name, "d": spec.d, "order": pr.order, "target": target,
                     "passed": bool(pr.order >= target - ORDER_TOLERANCE),
                     "lams": list(pr.lams), "remainders": list(pr.magnitudes), "floors": list(pr.floor)})
    fz = corpus(fresnel_lam)[0]
    q = oscillatory_quadrature(fz)
    exact = np.sqrt(2 * np.pi / fresnel_lam) * np.exp(1j * np.pi / 4)
    rel = float(abs(q.value - exact) / abs(exact))
    return {"cases": rows, "fresnel": {"lam": fresnel_lam, "value": [q.value.real, q.value.imag],
                                       "expected": [exact.real, exact.imag], "relative_error": rel,
                                       "passed": rel <= 0.01}}


def report_json(results: dict) -> str:
    return json.dumps(results, indent=1, sort_keys=True)
