"""Periodic grids, the Fourier transform contract and Fourier multipliers.

Transform convention (continuous, discretised with the grid weights)::

    u_hat(xi) = int u(x) exp(-i x xi) dx            ~  dx * sum_k u(x_k) exp(-i x_k xi)
    u(x)      = (1/2pi) int u_hat(xi) exp(i x xi) dxi ~  (dxi/2pi) * sum_m u_hat(xi_m) exp(i x xi_m)

with nodes ``x_k = -L/2 + k L/N`` and frequencies ``xi_m = 2 pi m / L``.  Arrays
in Fourier space are stored in FFT order; ``Grid1D.order`` sorts them.

The Nyquist mode ``m = -N/2`` has no partner, so odd symbols (``i xi``, the
Hilbert transform, the propagator phase) are evaluated as if ``xi = 0`` there.
That keeps real fields real under every multiplier.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .params import EquationParams

_TWO_PI_LD = np.longdouble("6.283185307179586476925286766559005768")

# fraction of the domain at each end watched for wrap-around
BOUNDARY_STRIP = 0.05
BOUNDARY_TOL = 1e-8


class GridError(ValueError):
    pass


class BoundaryMassError(RuntimeError):
    """Raised when a field carries too much mass near the edge of the periodic box."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    length: float
    count: int

    def __post_init__(self):
        if not self.length > 0:
            raise GridError(f"domain length must be positive, got {self.length}")
        if int(self.count) != self.count or not _is_pow2(int(self.count)):
            raise GridError(f"node count must be a power of two, got {self.count}")
        if self.count < 8:
            raise GridError(f"node count must be at least 8, got {self.count}")

    @property
    def dx(self) -> float:
        return self.length / self.count

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.length

    @cached_property
    def x(self) -> np.ndarray:
        return _frozen(-self.length / 2 + self.dx * np.arange(self.count))

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers in FFT order, covering [-N/2, N/2)."""
        N = self.count
        m = np.arange(N)
        return _frozen(np.where(m < N // 2, m, m - N))

    @cached_property
    def xi(self) -> np.ndarray:
        return _frozen(self.dxi * self.modes)

    @cached_property
    def xi_odd(self) -> np.ndarray:
        """Frequencies with the unpaired Nyquist mode set to zero."""
        xo = self.xi.copy()
        xo[self.count // 2] = 0.0
        return _frozen(xo)

    @property
    def xi_max(self) -> float:
        return np.pi * self.count / self.length

    @cached_property
    def order(self) -> np.ndarray:
        """Index map sorting FFT-ordered arrays into ascending frequency."""
        return _frozen(np.argsort(self.modes, kind="stable"))

    @cached_property
    def mirror(self) -> np.ndarray:
        """Index of -xi for every index (the Nyquist mode maps to itself)."""
        return _frozen((-np.arange(self.count)) % self.count)

    @cached_property
    def _alternating(self) -> np.ndarray:
        # exp(-i x_0 xi_m) = (-1)^m accounts for the grid starting at -L/2
        return _frozen(np.where(self.modes % 2 == 0, 1.0, -1.0))

    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep |m| <= N/3."""
        return np.abs(self.modes) <= self.count // 3

    def to_dict(self) -> dict:
        return {"length": float(self.length), "count": int(self.count)}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def make_grid(L: float, N: int) -> Grid1D:
    return Grid1D(float(L), int(N))


def fourier_transform(u: np.ndarray, grid: Grid1D) -> np.ndarray:
    return grid.dx * grid._alternating * np.fft.fft(u)


def inverse_fourier_transform(uh: np.ndarray, grid: Grid1D) -> np.ndarray:
    return np.fft.ifft(grid._alternating * uh) / grid.dx


class SpectralField:
    """A function on a periodic grid held as physical samples and/or Fourier data.

    Exactly one representation is authoritative at construction; the other is
    computed on first access and cached.  Stored arrays are read-only, so a
    field is an immutable value.
    """

    __slots__ = ("grid", "_phys", "_four")

    def __init__(self, grid: Grid1D, physical=None, fourier=None):
        if (physical is None) == (fourier is None):
            raise ValueError("give exactly one of physical or fourier")
        self.grid = grid
        self._phys = None if physical is None else _frozen(_as_complex(physical, grid))
        self._four = None if fourier is None else _frozen(_as_complex(fourier, grid))

    @classmethod
    def from_physical(cls, grid: Grid1D, values) -> "SpectralField":
        return cls(grid, physical=values)

    @classmethod
    def from_fourier(cls, grid: Grid1D, values) -> "SpectralField":
        return cls(grid, fourier=values)

    @classmethod
    def zeros(cls, grid: Grid1D) -> "SpectralField":
        return cls(grid, fourier=np.zeros(grid.count, complex))

    @property
    def physical(self) -> np.ndarray:
        if self._phys is None:
            self._phys = _frozen(inverse_fourier_transform(self._four, self.grid))
        return self._phys

    @property
    def fourier(self) -> np.ndarray:
        if self._four is None:
            self._four = _frozen(fourier_transform(self._phys, self.grid))
        return self._four

    @property
    def physical_valid(self) -> bool:
        return self._phys is not None

    @property
    def fourier_valid(self) -> bool:
        return self._four is not None

    @property
    def real(self) -> np.ndarray:
        return self.physical.real

    def map_fourier(self, symbol) -> "SpectralField":
        return SpectralField(self.grid, fourier=self.fourier * symbol)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        if self.fourier_valid and other.fourier_valid:
            return SpectralField(self.grid, fourier=self.fourier + other.fourier)
        return SpectralField(self.grid, physical=self.physical + other.physical)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + (-1.0) * other

    def __mul__(self, c) -> "SpectralField":
        if self.fourier_valid:
            return SpectralField(self.grid, fourier=c * self.fourier)
        return SpectralField(self.grid, physical=c * self.physical)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return (-1.0) * self

    def __repr__(self):
        which = "fourier" if self.fourier_valid else "physical"
        return f"SpectralField(N={self.grid.count}, L={self.grid.length}, {which})"


def _as_complex(values, grid: Grid1D) -> np.ndarray:
    a = np.array(values, dtype=complex)
    if a.shape != (grid.count,):
        raise ValueError(f"expected shape ({grid.count},), got {a.shape}")
    return a


def _check_same_grid(a: SpectralField, b: SpectralField):
    if a.grid != b.grid:
        raise GridError("fields live on different grids")


def to_fourier(field: SpectralField) -> SpectralField:
    """Return a field whose Fourier representation is populated."""
    return SpectralField(field.grid, fourier=field.fourier)


def to_physical(field: SpectralField) -> SpectralField:
    return SpectralField(field.grid, physical=field.physical)


def conjugate_symmetry_error(field: SpectralField) -> float:
    """max |u_hat(-xi) - conj(u_hat(xi))| relative to max |u_hat|; zero for real fields."""
    uh = field.fourier
    scale = np.abs(uh).max()
    if scale == 0:
        return 0.0
    return float(np.abs(uh[field.grid.mirror] - np.conj(uh)).max() / scale)


# ---------------------------------------------------------------- multipliers


def propagator_symbol(grid: Grid1D, t: float, n: int) -> np.ndarray:
    """exp(i t xi^n).  The phase is reduced mod 2 pi in extended precision."""
    xi = grid.xi_odd.astype(np.longdouble)
    phase = np.remainder(np.longdouble(t) * xi**n, _TWO_PI_LD)
    return np.exp(1j * phase.astype(float))


def _order(n_or_params) -> int:
    return n_or_params.n if isinstance(n_or_params, EquationParams) else int(n_or_params)


def apply_propagator(field: SpectralField, t: float, n) -> SpectralField:
    """Linear flow S(t) of u_t + (-1)^((n+1)/2) d_x^n u = 0.  ``n`` may be an EquationParams."""
    if t == 0:
        return field
    return field.map_fourier(propagator_symbol(field.grid, t, _order(n)))


def fractional_derivative(field: SpectralField, beta: float, kind: str = "abs") -> SpectralField:
    """Apply |xi|^beta (``kind="abs"``) or (i xi)^beta for integer beta (``kind="int"``)."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if beta == 0:
        return field
    g = field.grid
    if kind == "abs":
        return field.map_fourier(np.abs(g.xi) ** beta)
    if kind == "int":
        if int(beta) != beta:
            raise ValueError("integer derivative needs an integer beta")
        b = int(beta)
        xi = g.xi_odd if b % 2 else g.xi
        return field.map_fourier((1j * xi) ** b)
    raise ValueError(f"unknown derivative kind {kind!r}")


def hilbert_transform(field: SpectralField) -> SpectralField:
    return field.map_fourier(-1j * np.sign(field.grid.xi_odd))


# --------------------------------------------------------------------- norms


def japanese_bracket(z):
    return np.sqrt(1.0 + np.square(z))


def l2_norm(field: SpectralField) -> float:
    g = field.grid
    if field.physical_valid:
        return float(np.sqrt(g.dx * np.sum(np.abs(field.physical) ** 2)))
    return float(np.sqrt(g.dxi / (2 * np.pi) * np.sum(np.abs(field.fourier) ** 2)))


def sobolev_norm(field: SpectralField, s: float) -> float:
    g = field.grid
    w = japanese_bracket(g.xi) ** (2 * s)
    return float(np.sqrt(g.dxi / (2 * np.pi) * np.sum(w * np.abs(field.fourier) ** 2)))


def linf_fourier(field: SpectralField) -> float:
    return float(np.abs(field.fourier).max())


def lp_norm(field: SpectralField, p: float) -> float:
    a = np.abs(field.physical)
    if np.isinf(p):
        return float(a.max())
    return float((field.grid.dx * np.sum(a**p)) ** (1.0 / p))


def boundary_mass_fraction(field: SpectralField, strip: float = BOUNDARY_STRIP) -> float:
    """Fraction of ||u||_2^2 within ``strip * L`` of either end of the box."""
    g = field.grid
    dens = np.abs(field.physical) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    edge = np.abs(g.x) >= (0.5 - strip) * g.length
    return float(dens[edge].sum() / total)


def check_boundary(field: SpectralField, tol: float = BOUNDARY_TOL, what: str = "field") -> float:
    frac = boundary_mass_fraction(field)
    if frac > tol:
        raise BoundaryMassError(f"{what}: boundary mass fraction {frac:.3e} exceeds {tol:.1e}")
    return frac


def weighted_x_norm(field: SpectralField, check: bool = True) -> float:
    """||x u||_2 with the physical (sawtooth) coordinate; needs negligible boundary mass."""
    if check:
        check_boundary(field, what="weighted_x")
    g = field.grid
    return float(np.sqrt(g.dx * np.sum(np.abs(g.x * field.physical) ** 2)))


class Norms(NamedTuple):
    l2: float
    sobolev: float
    linf_fourier: float
    weighted_x: float


def norms(obj, s: float = 0.0, check: bool = True) -> Norms:
    """All four norms of a field or a profile (a profile is measured through f)."""
    f = obj.field if isinstance(obj, Profile) else obj
    return Norms(l2_norm(f), sobolev_norm(f, s), linf_fourier(f), weighted_x_norm(f, check=check))


# ------------------------------------------------------------------ profiles


@dataclass(frozen=True, eq=False)
class Profile:
    """Interaction-picture unknown f = S(-t) u, stored through f_hat.

    ``history_times`` / ``history_weights`` hold (s, |f_hat(s, xi)|^(p-1)) at past
    sample times; they feed the phase correction B(t, xi).
    """

    grid: Grid1D
    t: float
    fhat: np.ndarray
    n: int
    p: int | None = None
    history_times: tuple = ()
    history_weights: tuple = field(default=(), repr=False)

    def __post_init__(self):
        fh = np.array(self.fhat, dtype=complex)
        object.__setattr__(self, "fhat", _frozen(fh))
        ts = self.history_times
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("history times must be strictly increasing")

    @property
    def field(self) -> SpectralField:
        return SpectralField(self.grid, fourier=self.fhat)

    def record(self) -> "Profile":
        """Append the current |f_hat|^(p-1) to the history."""
        if self.p is None:
            raise ValueError("profile has no nonlinearity power recorded")
        if self.history_times and self.t <= self.history_times[-1]:
            raise ValueError("history times must be strictly increasing")
        w = _frozen(np.abs(self.fhat) ** (self.p - 1))
        return Profile(self.grid, self.t, self.fhat, self.n, self.p,
                       self.history_times + (float(self.t),), self.history_weights + (w,))

    def advance(self, t: float, fhat) -> "Profile":
        """New profile at time ``t`` carrying this profile's history."""
        return Profile(self.grid, float(t), fhat, self.n, self.p,
                       self.history_times, self.history_weights)


def to_profile(u: SpectralField, t: float, n, p: int | None = None) -> Profile:
    nn = _order(n)
    if p is None and isinstance(n, EquationParams):
        p = n.p
    fhat = u.fourier * np.conj(propagator_symbol(u.grid, t, nn))
    return Profile(u.grid, float(t), fhat, nn, p)


def from_profile(f: Profile, t: float | None = None) -> SpectralField:
    t = f.t if t is None else t
    return SpectralField(f.grid, fourier=f.fhat * propagator_symbol(f.grid, t, f.n))
