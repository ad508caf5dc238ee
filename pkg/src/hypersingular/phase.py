"""Rescaled phase g(r, theta) on one dyadic piece and its lower bounds.

    g(r, theta) = 2^-l |xi'| r cos(theta) + xi_last phi(2^-l r) + 2^(beta l) r^-beta

on [1/2, 2] x [0, pi].  The frequency scale lambda(xi, l) bounds every term
of g's first two derivatives; at each point one of |g_r|, |g_theta|,
|g_rr|, |g_thetatheta| is at least epsilon * lambda, and on each patch of
the chi_j partition one of them stays above epsilon * lambda / 2.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .bumps import EpsilonConstants, PatchIndex, patch_support
from .errors import DomainError
from .params import Frequency, OperatorParams
from .profiles import RadialProfile

__all__ = ["PhaseDerivatives", "CaseTag", "phase_and_derivatives", "phase_terms",
           "lambda_scale", "lambda_parts", "LemmaReport", "check_lemma_lower_bound",
           "classify_patch", "sample_configurations", "profile_sup"]

R_LO, R_HI = 0.5, 2.0


@dataclass(frozen=True)
class PhaseDerivatives:
    g: float
    g_r: float
    g_theta: float
    g_rr: float
    g_thetatheta: float
    g_rrr: float
    g_rrtheta: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


class CaseTag(str, enum.Enum):
    CASE_R1 = "CaseR1"
    CASE_THETA1 = "CaseTheta1"
    CASE_R2 = "CaseR2"
    CASE_THETA2 = "CaseTheta2"
    TRIVIAL_BOUND = "TrivialBound"


_CASE_ORDER = (CaseTag.CASE_R1, CaseTag.CASE_THETA1, CaseTag.CASE_R2, CaseTag.CASE_THETA2)


def phase_terms(beta: float, profile: RadialProfile, rho: float, zeta: float,
                l: int, r, theta):
    """Vectorized (g, g_r, g_theta, g_rr, g_thetatheta, g_rrr)."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    s = 2.0 ** (-l)
    osc = 2.0 ** (beta * l)
    p0, p1, p2, p3 = profile.derivatives(s * r)
    c, sn = np.cos(theta), np.sin(theta)
    lin = s * rho * r
    g = lin * c + zeta * p0 + osc * r ** (-beta)
    g_r = -beta * osc * r ** (-beta - 1) + s * rho * c + s * zeta * p1
    g_t = -lin * sn
    g_rr = beta * (beta + 1) * osc * r ** (-beta - 2) + s * s * zeta * p2
    g_tt = -lin * c
    g_rrr = -beta * (beta + 1) * (beta + 2) * osc * r ** (-beta - 3) + s ** 3 * zeta * p3
    return g, g_r, g_t, g_rr, g_tt, g_rrr


def _check_domain(r):
    r = np.asarray(r, dtype=float)
    if np.any((r < R_LO) | (r > R_HI)):
        raise DomainError("r must lie in [1/2, 2]")


def phase_and_derivatives(params: OperatorParams, profile: RadialProfile,
                          xi: Frequency, l: int, r: float, theta: float
                          ) -> PhaseDerivatives:
    """Closed-form g and its partials at one point; g_rrtheta is identically 0."""
    _check_domain(r)
    vals = phase_terms(params.beta, profile, xi.rho, xi.xi_last, l, r, theta)
    return PhaseDerivatives(*(float(v) for v in vals), g_rrtheta=0.0)


@functools.lru_cache(maxsize=4096)
def profile_sup(profile: RadialProfile, l: int, order: int, n_samples: int = 4096) -> float:
    """sup |phi^(order)| over [2^(-l-1), 2^(-l+1)].

    Log-uniform sampling followed by a bounded scalar refinement between
    the neighbours of the sampled maximum.
    """
    lo, hi = math.log(2.0 ** (-l - 1)), math.log(2.0 ** (-l + 1))
    x = np.linspace(lo, hi, n_samples)
    vals = np.abs(profile.derivatives(np.exp(x))[order])
    i = int(np.argmax(vals))
    best = float(vals[i])
    a, b = x[max(i - 1, 0)], x[min(i + 1, n_samples - 1)]
    if b > a:
        res = minimize_scalar(lambda t: -abs(profile.derivatives(math.exp(t))[order]),
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(a))})
        best = max(best, -float(res.fun))
    return best


def lambda_parts(params: OperatorParams, profile: RadialProfile, l: int,
                 n_sup_samples: int = 4096):
    """Coefficients (2^(beta l), 2^-l, A_l, B_l) with
    lambda = max(2^(beta l), 2^-l |xi'|, |xi_last| A_l, |xi_last| B_l)."""
    a_l = 2.0 ** (-2 * l) * profile_sup(profile, l, 2, n_sup_samples)
    b_l = 2.0 ** (-3 * l) * profile_sup(profile, l, 3, n_sup_samples)
    return 2.0 ** (params.beta * l), 2.0 ** (-l), a_l, b_l


def lambda_scale(params: OperatorParams, profile: RadialProfile, xi: Frequency,
                 l: int, n_sup_samples: int = 4096) -> float:
    if n_sup_samples < 64:
        raise ValueError("n_sup_samples must be >= 64")
    osc, s, a_l, b_l = lambda_parts(params, profile, l, n_sup_samples)
    z = abs(xi.xi_last)
    terms = [osc, s * xi.rho]
    if z:
        terms += [z * a_l, z * b_l]
    return max(terms)


@dataclass
class LemmaReport:
    min_ratio: float
    worst_point: tuple
    lam: float
    epsilon: float
    grid: tuple
    passed: bool

    def to_dict(self) -> dict:
        return {"min_ratio": self.min_ratio, "worst_point": list(self.worst_point),
                "lambda": self.lam, "epsilon": self.epsilon,
                "grid": list(self.grid), "pass": self.passed}


def check_lemma_lower_bound(params: OperatorParams, profile: RadialProfile,
                           xi: Frequency, l: int, eps: EpsilonConstants,
                           grid=(101, 101)) -> LemmaReport:
    """Brute-force min over a grid of max(|g_r|, |g_t|, |g_rr|, |g_tt|) / (eps lambda)."""
    n_r, n_t = grid
    r = np.linspace(R_LO, R_HI, n_r)[:, None]
    t = np.linspace(0.0, math.pi, n_t)[None, :]
    _, g_r, g_t, g_rr, g_tt, _ = phase_terms(params.beta, profile, xi.rho, xi.xi_last, l, r, t)
    big = np.maximum(np.maximum(np.abs(g_r), np.abs(g_t)),
                     np.maximum(np.abs(g_rr), np.abs(g_tt)))
    big = np.broadcast_to(big, (n_r, n_t))
    lam = lambda_scale(params, profile, xi, l)
    ratio = big / (eps.epsilon * lam)
    k = int(np.argmin(ratio))
    i, j = divmod(k, n_t)
    min_ratio = float(ratio.flat[k])
    return LemmaReport(min_ratio, (float(r[i, 0]), float(t[0, j])), lam,
                       eps.epsilon, (n_r, n_t), min_ratio >= 1.0)


def classify_patch(params: OperatorParams, profile: RadialProfile, xi: Frequency,
                   l: int, j: PatchIndex, eps: EpsilonConstants,
                   n_check: int = 9, lam: float | None = None) -> CaseTag:
    """First derivative (in the order g_r, g_t, g_rr, g_tt) whose magnitude is
    >= eps lambda / 2 at every sample of the patch support clipped to the
    domain; TrivialBound if none qualifies."""
    (r0, r1), (t0, t1) = patch_support(j, eps)
    r0, r1 = max(r0, R_LO), min(r1, R_HI)
    t0, t1 = max(t0, 0.0), min(t1, math.pi)
    if r0 > r1 or t0 > t1:
        raise DomainError(f"patch {j} does not meet [1/2, 2] x [0, pi]")
    r = np.linspace(r0, r1, n_check)[:, None]
    t = np.linspace(t0, t1, n_check)[None, :]
    if lam is None:
        lam = lambda_scale(params, profile, xi, l)
    _, g_r, g_t, g_rr, g_tt, _ = phase_terms(params.beta, profile, xi.rho, xi.xi_last, l, r, t)
    level = eps.epsilon * lam / 2
    for tag, d in zip(_CASE_ORDER, (g_r, g_t, g_rr, g_tt)):
        if np.all(np.abs(np.broadcast_to(d, (n_check, n_check))) >= level):
            return tag
    return CaseTag.TRIVIAL_BOUND


def _critical_frequency(rng, params, profile, l, xi_max):
    """Frequency making g_r and g_rr vanish together at a random point.

    Solving g_rr(r0) = 0 fixes xi_last, then g_r(r0, theta0) = 0 fixes
    |xi'| cos(theta0).  Such points are where the lower bound is tightest.
    """
    b = params.beta
    s = 2.0 ** (-l)
    osc = 2.0 ** (b * l)
    for _ in range(100):
        r0 = rng.uniform(R_LO, R_HI)
        _, p1, p2, _ = profile.derivatives(s * r0)
        zeta = -b * (b + 1) * osc * r0 ** (-b - 2) / (s * s * p2)
        need = b * osc * r0 ** (-b - 1) - s * zeta * p1   # = s rho cos(theta0)
        rho_cos = need / s
        cos0 = math.copysign(rng.uniform(0.05, 1.0), rho_cos)
        rho = rho_cos / cos0
        if math.hypot(rho, zeta) <= xi_max:
            phi = rng.uniform(0, 2 * math.pi)
            return Frequency((rho * math.cos(phi), rho * math.sin(phi)), zeta)
    return None


def sample_configurations(rng, n: int, params: OperatorParams, profile: RadialProfile,
                          xi_max: float = 1e6, l_max: int = 10,
                          critical_fraction: float = 0.5):
    """Seeded (xi, l) draws for lemma sweeps.

    A ``critical_fraction`` of the draws are built so that g_r and g_rr
    vanish at an interior point; the rest have log-uniform |xi| in
    [1e-3, xi_max] and a uniform direction in R^3.
    """
    out = []
    while len(out) < n:
        l = int(rng.integers(-l_max, l_max + 1))
        xi = None
        if rng.uniform() < critical_fraction:
            xi = _critical_frequency(rng, params, profile, l, xi_max)
        if xi is None:
            mag = 10 ** rng.uniform(-3, math.log10(xi_max))
            v = rng.normal(size=3)
            v *= mag / np.linalg.norm(v)
            xi = Frequency((v[0], v[1]), v[2])
        out.append((xi, l))
    return out
