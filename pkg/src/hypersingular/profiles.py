"""Radial profiles phi for the hypersurface Gamma(t) = (t, phi(|t|)).

Four closed-form families are supported.  Every profile evaluates
phi, phi', phi'', phi''' analytically so that the phase derivatives used
downstream are exact to machine precision.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (DegenerateDerivative, InvalidParams, NonPositiveRadius,
                     SignViolation)

__all__ = [
    "RadialProfile", "Monomial", "MonomialSaturating", "ExpSinh",
    "MonomialSum", "AdmissibilityCertificate", "eval_profile",
    "certify_admissibility", "gaussian_curvature", "profile_from_dict",
    "vanishes_at_origin",
]


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        bad = r[~(r > 0)].ravel()[0]
        raise NonPositiveRadius(f"radius must be positive, got {bad!r}")
    return r


def _falling(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= p - i
    return out


class RadialProfile:
    """Base class.  Subclasses implement :meth:`_derivs` on positive arrays."""

    kind: str = ""

    def derivatives(self, r):
        """Return ``(phi, phi', phi'', phi''')`` at ``r`` (scalar or array)."""
        ra = _check_radius(r)
        out = self._derivs(ra)
        if np.ndim(r) == 0:
            return tuple(float(v) for v in out)
        return out

    def __call__(self, r):
        return self.derivatives(r)[0]

    def _derivs(self, r):  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update(asdict(self))
        return d


@dataclass(frozen=True)
class Monomial(RadialProfile):
    """phi(r) = r**gamma."""

    gamma: float
    kind = "monomial"

    def _derivs(self, r):
        g = self.gamma
        return (r ** g,
                g * r ** (g - 1),
                _falling(g, 2) * r ** (g - 2),
                _falling(g, 3) * r ** (g - 3))


@dataclass(frozen=True)
class MonomialSaturating(RadialProfile):
    """phi(r) = r**gamma1 * (1 - exp(-r))**gamma2 with gamma1 > 1, gamma2 >= 0."""

    gamma1: float
    gamma2: float
    kind = "monomial_saturating"

    def __post_init__(self):
        if not self.gamma1 > 1 or not self.gamma2 >= 0:
            raise InvalidParams("need gamma1 > 1 and gamma2 >= 0")

    def _derivs(self, r):
        g1, g2 = self.gamma1, self.gamma2
        a = [r ** g1, g1 * r ** (g1 - 1), _falling(g1, 2) * r ** (g1 - 2),
             _falling(g1, 3) * r ** (g1 - 3)]
        s = -np.expm1(-r)
        e = np.exp(-r)
        s1, s2, s3 = e, -e, e
        if g2 == 0:
            b = [np.ones_like(r), np.zeros_like(r), np.zeros_like(r),
                 np.zeros_like(r)]
        else:
            b0 = s ** g2
            b1 = g2 * s ** (g2 - 1) * s1
            b2 = _falling(g2, 2) * s ** (g2 - 2) * s1 ** 2 + g2 * s ** (g2 - 1) * s2
            b3 = (_falling(g2, 3) * s ** (g2 - 3) * s1 ** 3
                  + 3 * _falling(g2, 2) * s ** (g2 - 2) * s1 * s2
                  + g2 * s ** (g2 - 1) * s3)
            b = [b0, b1, b2, b3]
        # Leibniz rule for (a*b)^(k)
        return (a[0] * b[0],
                a[1] * b[0] + a[0] * b[1],
                a[2] * b[0] + 2 * a[1] * b[1] + a[0] * b[2],
                a[3] * b[0] + 3 * a[2] * b[1] + 3 * a[1] * b[2] + a[0] * b[3])


@dataclass(frozen=True)
class ExpSinh(RadialProfile):
    """phi(r) = r**2 exp(-r) sinh(r) = r**2 (1 - exp(-2r)) / 2."""

    kind = "exp_sinh"

    def _derivs(self, r):
        u = -np.expm1(-2 * r)
        e = np.exp(-2 * r)
        u1, u2, u3 = 2 * e, -4 * e, 8 * e
        r2 = r * r
        return (0.5 * r2 * u,
                r * u + 0.5 * r2 * u1,
                u + 2 * r * u1 + 0.5 * r2 * u2,
                3 * u1 + 3 * r * u2 + 0.5 * r2 * u3)


@dataclass(frozen=True)
class MonomialSum(RadialProfile):
    """phi(r) = sum_j a_j r**(1 + gamma_j) with a_j > 0, gamma_j > 0."""

    terms: tuple = field(default_factory=tuple)
    kind = "monomial_sum"

    def __post_init__(self):
        terms = tuple((float(a), float(g)) for a, g in self.terms)
        if not terms:
            raise InvalidParams("monomial_sum needs at least one term")
        for a, g in terms:
            if not (a > 0 and g > 0):
                raise InvalidParams(f"term (a={a}, gamma={g}) needs a > 0, gamma > 0")
        object.__setattr__(self, "terms", terms)

    def _derivs(self, r):
        out = [np.zeros_like(r) for _ in range(4)]
        for a, g in self.terms:
            p = 1.0 + g
            for k in range(4):
                out[k] = out[k] + a * _falling(p, k) * r ** (p - k)
        return tuple(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "terms": [{"a": a, "gamma": g} for a, g in self.terms]}


def eval_profile(profile: RadialProfile, r):
    """Closed-form ``(phi, phi', phi'', phi''')`` at ``r > 0``."""
    return profile.derivatives(r)


def vanishes_at_origin(profile: RadialProfile, r0: float = 1e-8,
                       threshold: float = 1e-6) -> bool:
    return abs(profile(r0)) < threshold


def profile_from_dict(spec: dict) -> RadialProfile:
    """Build a profile from its JSON description.

    >>> profile_from_dict({"kind": "monomial", "gamma": 3.0})
    Monomial(gamma=3.0)
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidParams("profile spec must be an object with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "monomial":
            return Monomial(float(spec["gamma"]))
        if kind == "monomial_saturating":
            return MonomialSaturating(float(spec["gamma1"]), float(spec["gamma2"]))
        if kind == "exp_sinh":
            return ExpSinh()
        if kind == "monomial_sum":
            terms = []
            for t in spec["terms"]:
                if isinstance(t, dict):
                    terms.append((t["a"], t["gamma"]))
                else:
                    a, g = t
                    terms.append((a, g))
            return MonomialSum(tuple(terms))
    except KeyError as exc:
        raise InvalidParams(f"profile spec missing key {exc.args[0]!r}") from None
    raise InvalidParams(f"unknown profile kind {kind!r}")


@dataclass
class AdmissibilityCertificate:
    k1_hat: float
    k2_hat: float
    k3_hat: float
    r_range: tuple
    n_samples: int
    sign_ok: bool
    k3_skipped: int = 0
    violation_r: float | None = None

    @property
    def admissible(self) -> bool:
        return self.sign_ok and self.k1_hat > 0 and math.isfinite(self.k2_hat) \
            and math.isfinite(self.k3_hat)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r_range"] = list(self.r_range)
        d["admissible"] = self.admissible
        return d


def certify_admissibility(profile: RadialProfile, r_min: float = 1e-3,
                          r_max: float = 1e3, n_samples: int = 10_000
                          ) -> AdmissibilityCertificate:
    """Observed growth constants of ``profile`` on a log-uniform sample.

    k1_hat/k2_hat are the inf/sup of r phi''/phi', k3_hat the sup of
    |r phi'''/phi''|.  Samples with |phi''| < 1e-30 are left out of k3_hat
    and counted in ``k3_skipped``.

    Raises
    ------
    DegenerateDerivative
        phi' or phi'' is exactly zero at a sample.
    SignViolation
        phi' phi'' <= 0 at a sample.  The exception carries a certificate
        with ``sign_ok=False``.
    """
    if not (0 < r_min < r_max):
        raise InvalidParams("need 0 < r_min < r_max")
    if n_samples < 2:
        raise InvalidParams("need n_samples >= 2")
    r = np.geomspace(r_min, r_max, int(n_samples))
    _, d1, d2, d3 = profile.derivatives(r)
    for name, d in (("phi'", d1), ("phi''", d2)):
        zero = np.flatnonzero(d == 0)
        if zero.size:
            raise DegenerateDerivative(float(r[zero[0]]), name)
    ratio = r * d2 / d1
    keep = np.abs(d2) >= 1e-30
    k3 = float(np.max(np.abs(r[keep] * d3[keep] / d2[keep]))) if keep.any() else 0.0
    bad = np.flatnonzero(d1 * d2 <= 0)
    cert = AdmissibilityCertificate(
        k1_hat=float(ratio.min()), k2_hat=float(ratio.max()), k3_hat=k3,
        r_range=(float(r_min), float(r_max)), n_samples=int(n_samples),
        sign_ok=bad.size == 0, k3_skipped=int((~keep).sum()),
        violation_r=float(r[bad[0]]) if bad.size else None)
    if bad.size:
        raise SignViolation(float(r[bad[0]]), cert)
    return cert


def gaussian_curvature(profile: RadialProfile, r):
    """Gaussian curvature of the surface of revolution z = phi(|x|) in R^3."""
    _, d1, d2, _ = profile.derivatives(r)
    r = np.asarray(r, dtype=float)
    out = d1 * d2 / (r * (1 + d1 * d1) ** 2)
    return float(out) if np.ndim(out) == 0 else out
