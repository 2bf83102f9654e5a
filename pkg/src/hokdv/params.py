"""Equation parameters for the higher-order KdV family.

The simulated equation is

    u_t + (-1)^((n+1)/2) d_x^n u = sign * u^(p-1) u_x

with n odd and p >= 2.
"""
from __future__ import annotations

from dataclasses import dataclass


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class EquationParams:
    """Dispersion order ``n``, nonlinearity power ``p`` and nonlinearity sign.

    ``supercritical`` restricts to the scattering-supercritical range
    ``2 <= p < n`` with ``n >= 5``; otherwise ``p <= n + 1`` is accepted so that
    critical and borderline runs can be compared.
    """

    n: int
    p: int
    sign: int = 1
    supercritical: bool = False

    def __post_init__(self):
        n, p = self.n, self.p
        if int(n) != n or n < 3 or n % 2 == 0:
            raise ParameterError(f"n must be an odd integer >= 3, got {n}")
        if int(p) != p or p < 2:
            raise ParameterError(f"p must be an integer >= 2, got {p}")
        if self.sign not in (1, -1):
            raise ParameterError(f"sign must be +1 or -1, got {self.sign}")
        if self.supercritical:
            if not (p < n and n >= 5):
                raise ParameterError(f"supercritical mode needs 2 <= p < n and n >= 5, got n={n}, p={p}")
        elif p > n + 1:
            raise ParameterError(f"p must satisfy p <= n + 1, got n={n}, p={p}")

    @property
    def k(self) -> int:
        """Derivative order of the energy space H^k, k = (n-1)/2."""
        return (self.n - 1) // 2

    @property
    def decay_rate(self) -> float:
        return 1.0 / self.n

    @property
    def critical_exponent(self) -> float | None:
        """Exponent a in the linear-behaviour window |t| << eps^(-a); None if p >= n."""
        if self.p >= self.n:
            return None
        return self.n * (self.p - 1) / (self.n - self.p)

    def time_scale(self, eps: float) -> float:
        a = self.critical_exponent
        if a is None:
            return float("inf")
        return eps ** (-a)

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "sign": self.sign, "supercritical": self.supercritical}

    @classmethod
    def from_dict(cls, d: dict) -> "EquationParams":
        return cls(int(d["n"]), int(d["p"]), int(d.get("sign", 1)), bool(d.get("supercritical", False)))
