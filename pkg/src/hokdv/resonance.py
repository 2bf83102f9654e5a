"""Stationary points, phase values and Hessian signatures of the p-linear phase

    H(xi, xi_1, ..., xi_{p-1}) = xi^n - xi_1^n - ... - xi_p^n,
    xi_p = xi - xi_1 - ... - xi_{p-1}.

Index ``res_j`` labels the stationary family (distinct from dyadic indices).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .params import EquationParams

SIGNATURE_GUARD = 1e-9


class SingularHessianError(ArithmeticError):
    pass


class ResonanceIndexError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseH:
    n: int
    p: int

    def last(self, xi, xs):
        xs = np.asarray(xs, dtype=float)
        return xi - xs.sum(axis=-1)

    def __call__(self, xi, xs) -> float:
        xs = np.asarray(xs, dtype=float)
        if xs.shape[-1] != self.p - 1:
            raise ValueError(f"expected {self.p - 1} input frequencies, got {xs.shape[-1]}")
        xp = self.last(xi, xs)
        return xi**self.n - np.sum(xs**self.n, axis=-1) - xp**self.n

    def gradient(self, xi, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        xp = self.last(xi, xs)
        return -self.n * xs ** (self.n - 1) + self.n * np.expand_dims(xp, -1) ** (self.n - 1)

    def hessian(self, xi, xs) -> np.ndarray:
        return hessian_at(self.n, self.p, xi, xs)


def _check_j(p: int, j: int):
    if not (0 <= j <= p - 1) or p - 2 * j - 2 == 0:
        raise ResonanceIndexError(f"j={j} is not a stationary family for p={p}")


def family_indices(p: int) -> list:
    return [j for j in range(p) if p - 2 * j - 2 != 0]


@dataclass(frozen=True)
class StationaryPoint:
    """``coords`` = (j copies of -s, then p-j-1 copies of s), s = xi/(p-2j-2); xi_p = -s."""

    j: int
    xi: float
    value: float
    coords: tuple
    multiplicity: int

    @property
    def last(self) -> float:
        return -self.value

    @property
    def canonical(self) -> tuple:
        return tuple(sorted(self.coords, reverse=True))

    @property
    def full(self) -> tuple:
        return self.coords + (self.last,)


def stationary_point(p: int, j: int, xi: float) -> StationaryPoint:
    _check_j(p, j)
    if xi == 0:
        raise ValueError("stationary points need xi != 0")
    s = xi / (p - 2 * j - 2)
    coords = (-s,) * j + (s,) * (p - j - 1)
    return StationaryPoint(j, float(xi), s, tuple(float(c) for c in coords), comb(p - 1, j))


def stationary_points(n: int, p: int, xi: float) -> list:
    """All stationary families of H in the input frequencies at output ``xi``.

    ``n`` only enters through the gradient check performed here.
    """
    if xi == 0:
        raise ValueError("stationary points need xi != 0")
    H = PhaseH(n, p)
    pts = []
    for j in family_indices(p):
        pt = stationary_point(p, j, xi)
        g = np.abs(H.gradient(xi, pt.coords)).max()
        if g > 1e-10 * n * abs(xi) ** (n - 1):
            raise ArithmeticError(f"gradient {g:.3e} at j={j} is not small")
        pts.append(pt)
    return pts


def phase_coefficient(n: int, p: int, j: int) -> float:
    """d_j = 1 - (p-2j-2)^(-(n-1)); exactly zero on the time-resonant families."""
    return float(phase_coefficient_exact(n, p, j))


def phase_coefficient_exact(n: int, p: int, j: int) -> Fraction:
    _check_j(p, j)
    return 1 - Fraction(1, (p - 2 * j - 2) ** (n - 1))


def phase_at(n: int, p: int, j: int, xi: float) -> float:
    """H at the j-th stationary point: d_j xi^n."""
    return phase_coefficient(n, p, j) * xi**n


def is_time_resonant(p: int, j: int) -> bool:
    _check_j(p, j)
    return abs(p - 2 * j - 2) == 1


def hessian_at(n: int, p: int, xi: float, point) -> np.ndarray:
    """Hessian of H in (xi_1..xi_{p-1}): -n(n-1)[diag(xi_a^(n-2)) + xi_p^(n-2) J]."""
    xs = np.asarray(point.coords if isinstance(point, StationaryPoint) else point, dtype=float)
    if xs.ndim != 1 or xs.size != p - 1:
        raise ValueError(f"point must have {p - 1} coordinates")
    xp = xi - xs.sum()
    m = np.full((p - 1, p - 1), xp ** (n - 2))
    m[np.diag_indices(p - 1)] += xs ** (n - 2)
    return -n * (n - 1) * m


def m1_pattern(p: int) -> np.ndarray:
    """Unscaled resonant pattern for j=(p-1)/2: (p-1)/2 twos then (p-1)/2 zeros on the diagonal, ones off it."""
    h = (p - 1) // 2
    m = np.ones((p - 1, p - 1))
    m[np.diag_indices(p - 1)] = [2.0] * h + [0.0] * h
    return m


def m2_pattern(p: int) -> np.ndarray:
    """Unscaled resonant pattern for j=(p-3)/2: (p-3)/2 twos then (p+1)/2 zeros, ones off the diagonal."""
    m = np.ones((p - 1, p - 1))
    m[np.diag_indices(p - 1)] = [2.0] * ((p - 3) // 2) + [0.0] * ((p + 1) // 2)
    return m


def closed_form_hessian(n: int, p: int, j: int, xi: float) -> np.ndarray:
    """Hessian at a time-resonant family from its explicit pattern.

    j = (p-1)/2 gives -n(n-1) xi^(n-2) M1; j = (p-3)/2 gives +n(n-1) xi^(n-2) M2.
    """
    if p % 2 == 0 or j not in ((p - 1) // 2, (p - 3) // 2) or j < 0:
        raise ResonanceIndexError(f"j={j} is not time-resonant for p={p}")
    scale = n * (n - 1) * xi ** (n - 2)
    if j == (p - 1) // 2:
        return -scale * m1_pattern(p)
    return scale * m2_pattern(p)


def signature(m, guard: float = SIGNATURE_GUARD) -> int:
    """#positive - #negative eigenvalues; refuses eigenvalues within guard*||m||_2 of 0."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("signature needs a square matrix")
    if not np.allclose(m, m.T, rtol=1e-12, atol=0):
        raise ValueError("signature needs a symmetric matrix")
    ev = np.linalg.eigvalsh(m)
    scale = np.abs(ev).max() if ev.size else 0.0
    if scale == 0 or np.abs(ev).min() <= guard * scale:
        raise SingularHessianError(f"eigenvalue {np.abs(ev).min():.3e} within {guard:g}*||M|| of zero")
    return int(np.sum(ev > 0) - np.sum(ev < 0))


def hessian_determinant(n: int, p: int, j: int, xi: float) -> float:
    """|det Hess H| = (n(n-1))^(p-1) |s|^((n-2)(p-1)) |p-2j-2|, s = xi/(p-2j-2)."""
    _check_j(p, j)
    q = p - 2 * j - 2
    s = xi / q
    return float((n * (n - 1)) ** (p - 1) * abs(s) ** ((n - 2) * (p - 1)) * abs(q))


def signature_closed_form(p: int, j: int, xi: float) -> int:
    """Signature of the Hessian of -H at family j (the phase that appears as exp(-itH))."""
    _check_j(p, j)
    q = p - 2 * j - 2
    base = p - 2 * j - 1 if q < 0 else p - 2 * j - 3
    return int(np.sign(xi / q)) * base


@dataclass(frozen=True)
class SpectrumCheck:
    p: int
    computed: tuple
    expected: tuple
    max_error: float

    @property
    def ok(self) -> bool:
        return self.max_error <= 1e-9


def m1_spectrum_check(p: int) -> SpectrumCheck:
    """Eigenvalues of the M1 pattern vs -1, +1 (each (p-3)/2 times) and the roots of t^2-(p-1)t-1."""
    if p < 3 or p % 2 == 0:
        raise ValueError("p must be odd and >= 3")
    ev = np.sort(np.linalg.eigvalsh(m1_pattern(p)))
    r = np.sqrt((p - 1) ** 2 + 4.0)
    h = (p - 3) // 2
    expected = np.sort(np.array([-1.0] * h + [1.0] * h + [(p - 1 - r) / 2, (p - 1 + r) / 2]))
    return SpectrumCheck(p, tuple(ev.tolist()), tuple(expected.tolist()), float(np.abs(ev - expected).max()))


@dataclass(frozen=True)
class FamilyReport:
    j: int
    value: float
    coords: tuple
    multiplicity: int
    d: float
    phase: float
    time_resonant: bool
    hessian: tuple
    signature: int
    determinant: float

    def to_dict(self) -> dict:
        return {
            "j": self.j, "value": self.value, "coords": list(self.coords), "multiplicity": self.multiplicity,
            "d": self.d, "phase": self.phase, "time_resonant": self.time_resonant,
            "hessian": [list(r) for r in self.hessian], "signature": self.signature,
            "determinant": self.determinant,
        }


@dataclass(frozen=True)
class ResonanceReport:
    n: int
    p: int
    xi: float
    families: tuple = field(default=())

    @property
    def resonant(self) -> tuple:
        """Space-time resonant families: stationary with vanishing phase."""
        return tuple(f.j for f in self.families if f.time_resonant)

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "xi": self.xi, "resonant": list(self.resonant),
                "families": [f.to_dict() for f in self.families]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def table(self) -> str:
        head = f"{'j':>3} {'xi_j':>12} {'mult':>5} {'d_j':>14} {'resonant':>9} {'sig':>4} {'|det|':>12}"
        rows = [f"n={self.n} p={self.p} xi={self.xi:g}", head]
        for f in self.families:
            rows.append(f"{f.j:>3d} {f.value:>12.6g} {f.multiplicity:>5d} {f.d:>14.10g} "
                        f"{'yes' if f.time_resonant else 'no':>9} {f.signature:>4d} {f.determinant:>12.6g}")
        rows.append("space-time resonant j: " + (", ".join(map(str, self.resonant)) or "none"))
        return "\n".join(rows)


def classify(n: int, p: int, xi: float = 1.0) -> ResonanceReport:
    EquationParams(n, p)  # validates the pair
    fams = []
    for pt in stationary_points(n, p, xi):
        hess = hessian_at(n, p, xi, pt)
        fams.append(FamilyReport(
            j=pt.j, value=pt.value, coords=pt.coords, multiplicity=pt.multiplicity,
            d=phase_coefficient(n, p, pt.j), phase=phase_at(n, p, pt.j, xi),
            time_resonant=is_time_resonant(p, pt.j), hessian=tuple(tuple(r) for r in hess.tolist()),
            signature=signature(hess), determinant=float(abs(np.linalg.det(hess))),
        ))
    return ResonanceReport(n, p, float(xi), tuple(fams))
