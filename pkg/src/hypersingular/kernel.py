"""Degree-zero kernel factor Omega on the unit sphere.

For n = 2 the kernel is a trigonometric polynomial in the polar angle u
of t, with no constant term, so the vanishing mean and the sup bound hold
by construction.  For n >= 3 only zonal kernels (functions of the polar
angle theta measured from the xi' pole) are supported; they are expanded
in Gegenbauer polynomials of index (n - 2)/2, which are orthogonal to
constants for the weight sin(theta)**(n - 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_gegenbauer, gamma as gamma_fn

from .errors import InvalidKernel, ZeroFrequency

__all__ = ["KernelOmega", "ZonalKernel", "omega_mean", "omega_in_rotated_frame",
           "kernel_from_dict", "sphere_area"]


def sphere_area(m: int) -> float:
    """Surface measure of the unit sphere S^m in R^(m+1)."""
    return 2 * math.pi ** ((m + 1) / 2) / gamma_fn((m + 1) / 2)


@dataclass(frozen=True)
class KernelOmega:
    """Omega(u) = constant + sum_k a_k cos(k u) + b_k sin(k u).

    ``harmonics`` holds ``(k, a_k, b_k)`` triples with integer k >= 1.  A
    nonzero ``constant`` is only accepted with ``strict=False``; such a
    kernel violates the mean-zero hypothesis and exists for diagnostics.
    """

    harmonics: tuple = field(default_factory=tuple)
    constant: float = 0.0
    strict: bool = True

    def __post_init__(self):
        hs = []
        for h in self.harmonics:
            k, a, b = h
            if int(k) != k or k < 1:
                raise InvalidKernel(f"harmonic index must be an integer >= 1, got {k!r}")
            hs.append((int(k), float(a), float(b)))
        hs.sort()
        object.__setattr__(self, "harmonics", tuple(hs))
        if self.strict and self.constant != 0:
            raise InvalidKernel("kernel has a constant term, so its mean over S^1 is not zero")

    @property
    def dimension(self) -> int:
        return 2

    @property
    def sup_bound(self) -> float:
        return abs(self.constant) + sum(abs(a) + abs(b) for _, a, b in self.harmonics)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full(u.shape, self.constant, dtype=float)
        for k, a, b in self.harmonics:
            if a:
                out = out + a * np.cos(k * u)
            if b:
                out = out + b * np.sin(k * u)
        return out if out.ndim else float(out)

    def harmonic_weights(self, angle):
        """Coefficients a_k cos(k angle) + b_k sin(k angle), one row per harmonic."""
        angle = np.asarray(angle, dtype=float)
        return np.array([a * np.cos(k * angle) + b * np.sin(k * angle)
                         for k, a, b in self.harmonics])

    def to_dict(self) -> dict:
        d = {"harmonics": [{"k": k, "a": a, "b": b} for k, a, b in self.harmonics]}
        if self.constant:
            d["constant"] = self.constant
        return d


@dataclass(frozen=True)
class ZonalKernel:
    """Omega(theta) = sum_k c_k C_k^{(n-2)/2}(cos theta) on S^(n-1), n >= 3."""

    coefficients: tuple
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise InvalidKernel("zonal kernels are for n >= 3; use KernelOmega for n = 2")
        cs = []
        for k, c in self.coefficients:
            if int(k) != k or k < 1:
                raise InvalidKernel(f"Gegenbauer degree must be >= 1, got {k!r}")
            cs.append((int(k), float(c)))
        object.__setattr__(self, "coefficients", tuple(sorted(cs)))

    @property
    def dimension(self) -> int:
        return self.n

    @property
    def sup_bound(self) -> float:
        # |C_k^lam(x)| <= C_k^lam(1) for lam > 0 on [-1, 1]
        lam = (self.n - 2) / 2
        return sum(abs(c) * float(eval_gegenbauer(k, lam, 1.0))
                   for k, c in self.coefficients)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        lam = (self.n - 2) / 2
        x = np.cos(theta)
        out = np.zeros(theta.shape)
        for k, c in self.coefficients:
            out = out + c * eval_gegenbauer(k, lam, x)
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"zonal": [{"k": k, "c": c} for k, c in self.coefficients], "n": self.n}


def omega_mean(omega, n_quad: int = 64) -> float:
    """Integral of Omega over the unit sphere.

    Trapezoid rule in u for n = 2 (exact for degree < n_quad); Gauss-Legendre
    in theta with the sin^(n-2) weight for zonal kernels.
    """
    if n_quad < 16:
        raise ValueError("n_quad must be >= 16")
    if isinstance(omega, ZonalKernel):
        x, w = np.polynomial.legendre.leggauss(n_quad)
        theta = 0.5 * math.pi * (x + 1)
        vals = omega(theta) * np.sin(theta) ** (omega.n - 2)
        return float(0.5 * math.pi * np.dot(w, vals) * sphere_area(omega.n - 2))
    u = 2 * math.pi * np.arange(n_quad) / n_quad
    return float(2 * math.pi * np.mean(omega(u)))


def omega_in_rotated_frame(omega, xi_prime, theta, sigma=1):
    """Omega at polar angle theta from the xi' pole, on side ``sigma`` of it.

    For n = 2 this is Omega(angle(xi') + sigma * theta).  Zonal kernels do
    not depend on xi' or sigma.
    """
    xi_prime = np.asarray(xi_prime, dtype=float)
    if not np.any(xi_prime):
        raise ZeroFrequency("xi' = 0 has no pole; evaluate Omega in the standard frame")
    if isinstance(omega, ZonalKernel):
        return omega(theta)
    if sigma not in (-1, 1):
        raise ValueError("sigma must be +1 or -1")
    base = math.atan2(xi_prime[1], xi_prime[0])
    return omega(base + sigma * np.asarray(theta, dtype=float))


def kernel_from_dict(spec: dict):
    """Parse ``{"harmonics": [{"k": 1, "a": 1.0, "b": 0.0}]}`` (or a zonal spec)."""
    if not isinstance(spec, dict):
        raise InvalidKernel("kernel spec must be an object")
    if "zonal" in spec:
        try:
            return ZonalKernel(tuple((c["k"], c["c"]) for c in spec["zonal"]), int(spec["n"]))
        except KeyError as exc:
            raise InvalidKernel(f"kernel spec missing key {exc.args[0]!r}") from None
    if "harmonics" not in spec:
        raise InvalidKernel("kernel spec missing key 'harmonics'")
    hs = []
    for h in spec["harmonics"]:
        try:
            hs.append((h["k"], h.get("a", 0.0), h.get("b", 0.0)))
        except (KeyError, AttributeError):
            raise InvalidKernel("each harmonic needs a 'k' key") from None
    return KernelOmega(tuple(hs), constant=float(spec.get("constant", 0.0)))
