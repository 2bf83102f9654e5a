"""Smooth Littlewood-Paley pieces and their norm envelopes.

phi = 1 on |xi| <= 1 and 0 on |xi| >= 2; psi(xi) = phi(xi) - phi(2 xi) lives on
1/2 <= |xi| <= 2 and sum_j psi(xi / 2^j) = 1 for xi != 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .smooth import smooth_step
from .spectral import (BOUNDARY_TOL, BoundaryMassError, Profile, SpectralField, boundary_mass_fraction, l2_norm,
                       linf_fourier, lp_norm, weighted_x_norm)

# bounds for sum_j psi_j^2: at most two pieces overlap and they sum to 1
ORTHO_LOWER = 0.5
ORTHO_UPPER = 1.0


def phi(xi):
    return 1.0 - smooth_step(np.abs(np.asarray(xi, dtype=float)) - 1.0)


def psi(xi):
    xi = np.asarray(xi, dtype=float)
    return phi(xi) - phi(2 * xi)


def _field(f) -> SpectralField:
    return f.field if isinstance(f, Profile) else f


def lp_piece(f, dyad_j: int) -> SpectralField:
    """f_j with Fourier transform psi(xi / 2^j) f_hat."""
    u = _field(f)
    return u.map_fourier(psi(u.grid.xi / 2.0**dyad_j))


def lp_below(f, dyad_j: int) -> SpectralField:
    """f_{<j} = sum_{k<j} f_k, Fourier multiplier phi(xi / 2^(j-1))."""
    u = _field(f)
    return u.map_fourier(phi(u.grid.xi / 2.0 ** (dyad_j - 1)))


def _piece_xnorm(fj: SpectralField, total_mass: float, j: int) -> float:
    """||x f_j||_2, with the boundary mass of the piece measured against ||f||_2^2.

    Pieces carrying roundoff-level mass are pure noise relative to themselves;
    what matters is that their wrapped part is negligible for f as a whole.
    """
    mass = l2_norm(fj) ** 2
    frac = boundary_mass_fraction(fj) * mass / total_mass if total_mass > 0 else 0.0
    if frac > BOUNDARY_TOL:
        raise BoundaryMassError(f"piece {j}: boundary mass {frac:.3e} of ||f||^2 exceeds {BOUNDARY_TOL:.1e}")
    return weighted_x_norm(fj, check=False)


def dyad_range(grid) -> tuple:
    """Dyads whose piece is resolved: 2^j spans at least 64 frequency steps and stays below the cutoff.

    Coarser pieces have physical kernels of width ~ 1 / 2^j that reach the box
    boundary and fail the weighted-norm boundary check.
    """
    lo = int(np.ceil(np.log2(64 * grid.dxi)))
    hi = int(np.ceil(np.log2(grid.xi_max))) + 1
    return lo, hi


@dataclass(frozen=True)
class FreqlocRow:
    dyad_j: int
    linf: float
    xnorm: float
    l1: float
    env_linf: float
    env_x: float
    env_l1: float
    env_l1_alpha: float

    @property
    def ratios(self) -> tuple:
        return (self.linf / self.env_linf, self.xnorm / self.env_x, self.l1 / self.env_l1,
                self.l1 / self.env_l1_alpha)


@dataclass(frozen=True)
class FreqlocReport:
    t: float
    n: int
    alpha: float
    rows: tuple
    highfreq: tuple

    @property
    def prefactor(self) -> float:
        """Fitted eps_1: the largest measured/envelope ratio over dyads and norms."""
        vals = [r for row in self.rows for r in row.ratios] + [h[2] for h in self.highfreq]
        return float(max(vals)) if vals else 0.0

    def csv_rows(self) -> list:
        out = [("t", "dyad_j", "linf", "xnorm", "l1", "env_linf", "env_x", "env_l1", "env_l1_alpha")]
        for r in self.rows:
            out.append((self.t, r.dyad_j, r.linf, r.xnorm, r.l1, r.env_linf, r.env_x, r.env_l1, r.env_l1_alpha))
        return out


def freqloc_report(f, t: float, n: int | None = None, alpha: float = 0.25, dyads=None) -> FreqlocReport:
    """Measured piece norms against the frequency-localised envelopes (unit prefactor).

    Envelopes per dyad j, with r = 2^j t^(1/n):
      ||f_j^||_inf <= 1, ||x f_j||_2 <= 2^(-j/2) + t^(1/(2n)) min(1, r^-alpha),
      ||f_j||_1 <= 1 + r^(1/4),  ||f_j||_1 <= 1 + r^(1/4 - alpha/2);
    and for 2^j >= t^(-1/n): ||f_<j||_1 <= r^(1/4 - alpha/2).
    """
    if not 0 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [0, 1/2]")
    if n is None:
        if not isinstance(f, Profile):
            raise ValueError("n is needed for a bare field")
        n = f.n
    u = _field(f)
    lo, hi = dyad_range(u.grid) if dyads is None else (min(dyads), max(dyads))
    rows, high = [], []
    total = l2_norm(u) ** 2
    for j in range(lo, hi + 1):
        fj = lp_piece(u, j)
        r = 2.0**j * t ** (1.0 / n)
        rows.append(FreqlocRow(
            j, linf_fourier(fj), _piece_xnorm(fj, total, j), lp_norm(fj, 1),
            1.0, 2.0 ** (-j / 2) + t ** (1 / (2 * n)) * min(1.0, r ** (-alpha)),
            1 + r**0.25, 1 + r ** (0.25 - alpha / 2),
        ))
        if r >= 1:
            env = r ** (0.25 - alpha / 2)
            high.append((j, lp_norm(lp_below(u, j), 1), lp_norm(lp_below(u, j), 1) / env))
    return FreqlocReport(float(t), int(n), float(alpha), tuple(rows), tuple(high))


def orthogonality_bounds(f) -> tuple:
    """(sum_j ||f_j||^2 / ||f||^2) computed over all dyads that touch the grid."""
    u = _field(f)
    g = u.grid
    lo = int(np.floor(np.log2(g.dxi))) - 1
    hi = int(np.ceil(np.log2(g.xi_max))) + 1
    total = sum(l2_norm(lp_piece(u, j)) ** 2 for j in range(lo, hi + 1))
    return total / l2_norm(u) ** 2
