"""Explicit bump functions and the constants that size the patch partition.

eta = zeta o log2 gives the dyadic partition sum_l eta(2^l r) = 1, kappa
gives the shift partition sum_z kappa(x + 4z/3) = 1, and chi_j is the
tensor product of two rescaled kappas.

kappa is built from psi(x) = exp(-1/(x (4/3 - x))) on (0, 4/3).  The
shifted copies psi(x + 4j/3) have disjoint supports, so kappa equals 1 on
(0, 4/3) and 0 elsewhere.  At the points 4z/3 every term vanishes; the
0/0 quotient is resolved by kappa(0) = 1, so kappa is the indicator of
[0, 4/3) and the shift partition holds at every x.  Consequently chi_j
for integer index j = (j1, j2) lives on [eps1 j1, eps1 (j1+1)] x [eps2 j2, eps2 (j2+1)].
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.special import expit

from .errors import InvalidParams, NonPositiveRadius

__all__ = ["zeta", "eta", "psi", "kappa", "EpsilonConstants", "compute_epsilons",
           "epsilon_bound", "PatchIndex", "chi", "patch_support", "patch_ranges",
           "patch_count", "patches_near", "dyadic_levels_near"]

SHIFT = 4.0 / 3.0


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def zeta(x):
    """Smooth step on (-1, 1) with zeta(0) = 1 and zeta(y) + zeta(y - 1) = 1 on [0, 1]."""
    xa = np.abs(np.asarray(x, dtype=float))
    out = np.zeros(xa.shape)
    inside = xa < 1
    y = xa[inside]
    with np.errstate(divide="ignore"):
        # zeta = 1 / (1 + exp(1/(1-y) - 1/y)); y = 0 gives exponent -inf
        expo = 1.0 / (1.0 - y) - 1.0 / y
    out[inside] = expit(-expo)
    return _scalar_or_array(x, out)


def eta(r):
    """Dyadic bump eta(r) = zeta(log2 r), supported in [1/2, 2]."""
    ra = np.asarray(r, dtype=float)
    if np.any(~(ra > 0)):
        raise NonPositiveRadius("eta needs r > 0")
    return _scalar_or_array(r, np.asarray(zeta(np.log2(ra))))


def dyadic_levels_near(r) -> range:
    """Integers l for which eta(2^l r) can be nonzero."""
    c = -math.log2(r)
    return range(math.floor(c) - 1, math.ceil(c) + 2)


def _log_psi(xa):
    out = np.full(xa.shape, -np.inf)
    inside = (xa > 0) & (xa < SHIFT)
    y = xa[inside]
    # stays finite for subnormal y so kappa sees the point as inside the support
    with np.errstate(over="ignore", divide="ignore"):
        out[inside] = np.maximum(-1.0 / (y * (SHIFT - y)), -np.finfo(float).max)
    return out


def psi(x):
    xa = np.asarray(x, dtype=float)
    with np.errstate(under="ignore"):
        out = np.exp(_log_psi(xa))
    return _scalar_or_array(x, out)


def kappa(x):
    """psi(x) / sum_j psi(x + 4j/3), with kappa(0) = 1 and 0/0 := 0 elsewhere.

    The quotient is formed in log space so that psi underflowing near the
    edges of its support does not turn into 0/0.
    """
    xa = np.asarray(x, dtype=float)
    base = np.floor(-xa / SHIFT)
    num = _log_psi(xa)
    # only shifts meeting [x - 4/3, x + 4/3] can contribute
    terms = np.stack([_log_psi(xa + SHIFT * (base + dj)) for dj in (-1, 0, 1, 2)])
    top = terms.max(axis=0)
    ok = np.isfinite(top) & np.isfinite(num)
    out = np.zeros(xa.shape)
    t = terms[:, ok] - top[ok]
    with np.errstate(under="ignore"):
        out[ok] = np.exp(num[ok] - top[ok]) / np.exp(t).sum(axis=0)
    out[xa == 0] = 1.0
    return _scalar_or_array(x, out)


def epsilon_bound(k2: float, k3: float, beta: float) -> float:
    """Minimum of the four terms epsilon must stay strictly below.

    With k3 = 0 (phi''' == 0, e.g. phi = r^2) the fourth term is absent.
    """
    terms = [1 / (2 * math.sqrt(2)),
             1 / (4 * k2 * (3 * beta + 7)),
             beta / ((4 + 3 * k2) * 2 ** beta)]
    if k3 > 0:
        terms.append(1 / (8 * k2 * k3 * (3 * beta + 7)))
    return min(terms)


@dataclass(frozen=True)
class EpsilonConstants:
    epsilon: float
    epsilon1: float
    epsilon2: float
    k2: float
    k3: float
    beta: float
    bound: float
    safety: float

    def inflated(self, factor: float) -> "EpsilonConstants":
        """Copy with epsilon scaled by ``factor``; only for sanity checks."""
        eps = self.epsilon * factor
        e1, e2 = _patch_steps(eps, self.beta)
        return replace(self, epsilon=eps, epsilon1=e1, epsilon2=e2,
                       safety=self.safety * factor)

    def to_dict(self) -> dict:
        return asdict(self)


def _patch_steps(eps: float, beta: float):
    b = beta
    e1 = min(eps / (6 * b * (b + 1) * 2 ** (b + 2)),
             eps / (4 * b * (b + 1) * (b + 2) * 2 ** (b + 3)),
             eps / 8)
    return e1, eps / 8


def compute_epsilons(k2: float, k3: float, beta: float,
                     safety: float = 0.5) -> EpsilonConstants:
    """epsilon = safety * epsilon_bound, and the patch steps eps1, eps2."""
    if not (k2 > 0 and beta > 0 and k3 >= 0):
        raise InvalidParams("need k2 > 0, k3 >= 0, beta > 0")
    if not (0 < safety < 1):
        raise InvalidParams("safety must lie in (0, 1): the bound on epsilon is strict")
    bound = epsilon_bound(k2, k3, beta)
    eps = safety * bound
    e1, e2 = _patch_steps(eps, beta)
    return EpsilonConstants(eps, e1, e2, float(k2), float(k3), float(beta),
                            bound, float(safety))


@dataclass(frozen=True, order=True)
class PatchIndex:
    """Integer multiples (j1, j2) of (eps1, eps2)."""

    j1: int
    j2: int


def chi(j: PatchIndex, eps: EpsilonConstants, r, theta):
    # (r / eps1 - j1) is exact for neighbouring j1, so adjacent copies agree
    # on which one owns a lattice line
    x = SHIFT * (np.asarray(r, dtype=float) / eps.epsilon1 - j.j1)
    y = SHIFT * (np.asarray(theta, dtype=float) / eps.epsilon2 - j.j2)
    out = np.asarray(kappa(x)) * np.asarray(kappa(y))
    return float(out) if out.ndim == 0 else out


def patch_support(j: PatchIndex, eps: EpsilonConstants):
    """Closed rectangle ``((r0, r1), (t0, t1))`` containing supp chi_j."""
    e1, e2 = eps.epsilon1, eps.epsilon2
    return (e1 * j.j1, e1 * (j.j1 + 1)), (e2 * j.j2, e2 * (j.j2 + 1))


def patch_ranges(eps: EpsilonConstants):
    """Index ranges for j1 and j2 covering [1/2, 2] x [0, pi].

    j1 eps1 runs over eps1 Z within [1/2 - eps1, 2 + eps1] and j2 eps2 over
    eps2 Z within [-eps2, pi + eps2].  The dyadic level never enters.
    """
    e1, e2 = eps.epsilon1, eps.epsilon2
    r1 = range(math.ceil((0.5 - e1) / e1), math.floor((2 + e1) / e1) + 1)
    r2 = range(math.ceil(-1.0), math.floor((math.pi + e2) / e2) + 1)
    return r1, r2


def patch_count(eps: EpsilonConstants) -> int:
    r1, r2 = patch_ranges(eps)
    return len(r1) * len(r2)


def patches_near(eps: EpsilonConstants, r: float, theta: float):
    """Indices j whose chi_j may be nonzero at (r, theta)."""
    a = math.floor(r / eps.epsilon1)
    b = math.floor(theta / eps.epsilon2)
    return [PatchIndex(a + da, b + db) for da in (-1, 0, 1) for db in (-1, 0, 1)]
