"""Operator parameters (n, alpha, beta) and the exponents derived from them."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidParams

__all__ = ["OperatorParams", "Frequency"]


@dataclass(frozen=True)
class OperatorParams:
    """Hypersingularity alpha, oscillation exponent beta, surface dimension n.

    The operator acts on functions on R^(n+1).  beta > 2 alpha > 0 is
    enforced on construction.
    """

    n: int = 2
    alpha: float = 0.25
    beta: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParams(f"n must be an integer >= 2, got {self.n!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise InvalidParams("alpha and beta must be positive")
        if not self.beta > 2 * self.alpha:
            raise InvalidParams(
                f"need beta > 2 alpha, got alpha={self.alpha}, beta={self.beta}")

    @property
    def p_window(self) -> tuple[float, float]:
        """Open interval of p with L^p boundedness."""
        a, b = self.alpha, self.beta
        return b / (b - a), b / a

    @property
    def high_decay_exponent(self) -> float:
        """Exponent c in |m_l| <~ 2^(c l) for l >= 0."""
        return self.alpha - self.beta / 2

    def s0(self, k3: float) -> float:
        """L^2 Sobolev smoothing order (beta/2 - alpha) / (beta + k3 + 2)."""
        return (self.beta / 2 - self.alpha) / (self.beta + k3 + 2)

    def envelope_exponents(self, k3: float) -> tuple[float, float]:
        """Decay exponents of |m| for the xi'-dominant and xi_last-dominant regimes."""
        c = self.alpha - self.beta / 2
        return c / (1 + self.beta), c / (self.beta + k3 + 2)

    def lp_sobolev_region(self, k3: float) -> list[tuple[float, float]]:
        """Vertices ``(1/p, s)`` of the predicted L^p -> L^p_s region.

        Reported only; the region is the triangle between the L^p window
        at s = 0 and the point (1/2, s0).
        """
        a_b = self.alpha / self.beta
        return [(a_b, 0.0), (1 - a_b, 0.0), (0.5, self.s0(k3))]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Frequency:
    """xi = (xi', xi_last) in R^(n+1)."""

    xi_prime: tuple
    xi_last: float = 0.0

    def __post_init__(self):
        xp = tuple(float(v) for v in np.atleast_1d(self.xi_prime))
        object.__setattr__(self, "xi_prime", xp)
        object.__setattr__(self, "xi_last", float(self.xi_last))
        if not all(math.isfinite(v) for v in xp + (self.xi_last,)):
            raise InvalidParams("frequency components must be finite")

    @classmethod
    def from_vector(cls, xi) -> "Frequency":
        xi = [float(v) for v in xi]
        return cls(tuple(xi[:-1]), xi[-1])

    @property
    def rho(self) -> float:
        return math.hypot(*self.xi_prime)

    @property
    def angle(self) -> float:
        return math.atan2(self.xi_prime[1], self.xi_prime[0]) if len(self.xi_prime) >= 2 else 0.0

    @property
    def norm(self) -> float:
        return math.hypot(self.rho, self.xi_last)

    def as_tuple(self) -> tuple:
        return self.xi_prime + (self.xi_last,)
