"""Dyadic pieces m_l of the Fourier multiplier and their assembly.

    m_l(xi) = 2^(alpha l) sum_sigma int_0^pi int_{1/2}^2
              exp(-2 pi i g(r, theta)) Omega_rot(theta, sigma) sin^(n-2)(theta)
              eta(r) r^(-alpha-1) dr dtheta

Two evaluation routes are provided:

``polar``
    Tensor-product panel quadrature of the (r, theta) integral above.  Works
    for trigonometric kernels (n = 2) and zonal kernels (n >= 3).
``radial``
    n = 2 only.  For a trigonometric kernel the theta integral is exact,

        int_{-pi}^{pi} exp(-i z cos u) Omega(a + u) du
            = 2 pi sum_k (-i)^k J_k(z) (a_k cos(k a) + b_k sin(k a)),

    which leaves a one-dimensional oscillatory integral in r.  The radial
    integrals depend on xi only through (|xi'|, xi_last), so whole frequency
    lattices are evaluated by vectorizing over |xi'|.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import j0, j1, jv

from .bumps import eta
from .errors import DegenerateData, InvalidKernel, NonconvergentTail
from .kernel import KernelOmega, ZonalKernel, sphere_area
from .params import Frequency, OperatorParams
from .phase import lambda_parts, lambda_scale
from .profiles import RadialProfile
from .quadrature import (GL_ORDER, MAX_PANELS, integrate_oscillatory,
                         integrate_oscillatory_1d)

__all__ = ["OperatorParams", "Frequency", "m_l", "radial_pieces",
           "m_l_detail", "m_total", "m_total_adaptive", "MultiplierSum", "multiplier_values",
           "piece_bound", "default_method", "DecayFit", "decay_fit", "EnvelopeReport", "sobolev_envelope",
           "cartesian_oracle", "feasible_levels", "lattice_pieces", "LatticeResult"]

TWO_PI = 2 * math.pi
_R_SAMPLES = np.linspace(0.5, 2.0, 513)


def _bessel(k, x):
    if k == 0:
        return j0(x)
    if k == 1:
        return j1(x)
    return jv(k, x)


def _radial_phase(params, profile, zeta, l, r):
    """zeta phi(2^-l r) + 2^(beta l) r^-beta and its r-derivative."""
    s = 2.0 ** (-l)
    osc = 2.0 ** (params.beta * l)
    p0, p1, _, _ = profile.derivatives(s * r)
    return (zeta * p0 + osc * r ** (-params.beta),
            s * zeta * p1 - params.beta * osc * r ** (-params.beta - 1))


def _r_gradient_bound(params, profile, rho, zeta, l):
    """sup over the domain of |g_r|, attained at cos(theta) = +-1."""
    _, d = _radial_phase(params, profile, zeta, l, _R_SAMPLES)
    lin = 2.0 ** (-l) * rho
    return 1.05 * float(np.max(np.abs(d) + lin))


def _polar_integrand(params, profile, omega, xi, l):
    b, a = params.beta, params.alpha
    s = 2.0 ** (-l)
    osc = 2.0 ** (b * l)
    rho, zeta = xi.rho, xi.xi_last
    if isinstance(omega, ZonalKernel):
        if params.n != omega.n:
            raise InvalidKernel(f"zonal kernel is for n = {omega.n}, operator has n = {params.n}")
        weight = sphere_area(params.n - 2)
        power = params.n - 2

        def angular(t):
            return weight * omega(t) * np.sin(t) ** power
    else:
        if params.n != 2:
            raise InvalidKernel("trigonometric kernels need n = 2; use a ZonalKernel for n >= 3")
        base = xi.angle if rho > 0 else 0.0

        def angular(t):
            return omega(base + t) + omega(base - t)

    def integrand(r, t):
        p0 = profile.derivatives(s * r)[0]
        radial = eta(r) * r ** (-a - 1)
        g = s * rho * r * np.cos(t) + zeta * p0 + osc * r ** (-b)
        return np.exp(-2j * math.pi * g) * radial * angular(t)

    return integrand


def _kernel_freq(omega):
    if isinstance(omega, ZonalKernel):
        return max((k for k, _ in omega.coefficients), default=0) / TWO_PI
    return max((k for k, _, _ in omega.harmonics), default=0) / TWO_PI


def m_l(params: OperatorParams, profile: RadialProfile, omega, xi: Frequency, l: int,
        tol: float = 1e-8, method: str = "polar", max_panels: int = MAX_PANELS) -> complex:
    """Dyadic piece m_l(xi) to absolute accuracy ~tol.

    ``method`` is "polar" (2-D panel quadrature, any supported kernel) or
    "radial" (angular integral done exactly with Bessel functions, n = 2).
    """
    return m_l_detail(params, profile, omega, xi, l, tol, method, max_panels)[0]


def m_l_detail(params: OperatorParams, profile: RadialProfile, omega, xi: Frequency,
               l: int, tol: float = 1e-8, method: str = "polar",
               max_panels: int = MAX_PANELS):
    """``(m_l(xi), panels_used)``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if method == "radial":
        ks, table, panels = _radial_table(params, profile, omega, [xi.rho], xi.xi_last, l,
                                          tol, max_panels)
        w = _angle_weights(omega, xi.angle if xi.rho > 0 else 0.0)
        return complex(np.dot(w, table[:, 0])), panels
    if method != "polar":
        raise ValueError(f"unknown method {method!r}")
    scale = 2.0 ** (params.alpha * l)
    integrand = _polar_integrand(params, profile, omega, xi, l)
    bound_r = _r_gradient_bound(params, profile, xi.rho, xi.xi_last, l)
    bound_t = 2 * 2.0 ** (-l) * xi.rho + _kernel_freq(omega)
    res = integrate_oscillatory(integrand, (bound_r, bound_t), tol / scale,
                                max_panels=max_panels)
    return scale * res.value, res.panels_used


def _harmonics(omega):
    if isinstance(omega, ZonalKernel):
        raise InvalidKernel("the radial route needs a trigonometric kernel (n = 2)")
    hs = list(omega.harmonics)
    if omega.constant:
        hs = [(0, omega.constant, 0.0)] + hs
    return hs


def _radial_table(params, profile, omega, rho, zeta, l, tol, max_panels):
    if params.n != 2:
        raise InvalidKernel("the radial route is implemented for n = 2")
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    hs = _harmonics(omega)
    ks = [k for k, _, _ in hs]
    scale = 2.0 ** (params.alpha * l)
    s = 2.0 ** (-l)
    amp = max(1.0, omega.sup_bound)
    a = params.alpha

    def integrand(r):
        ph, _ = _radial_phase(params, profile, zeta, l, r)
        base = np.exp(-2j * math.pi * ph) * eta(r) * r ** (-a - 1)
        z = TWO_PI * s * r[:, None] * rho[None, :]
        return np.stack([base[:, None] * _bessel(k, z) for k in ks], axis=1)

    bound = _r_gradient_bound(params, profile, 0.0, zeta, l) + s * float(rho.max(initial=0.0))
    res = integrate_oscillatory_1d(integrand, (0.5, 2.0), bound,
                                   tol / (scale * TWO_PI * amp), max_panels=max_panels)
    phase = np.array([(-1j) ** k for k in ks])
    table = scale * TWO_PI * phase[:, None] * res.value
    return ks, table, res.panels_used


def radial_pieces(params: OperatorParams, profile: RadialProfile, omega, rho, zeta: float,
                  l: int, tol: float = 1e-8, max_panels: int = MAX_PANELS):
    """Angular-reduced pieces for many |xi'| at one (xi_last, l).

    Returns ``(ks, table)`` where ``table[h, i]`` multiplies the harmonic
    weight a_k cos(k a) + b_k sin(k a) of harmonic ``ks[h]`` at rho[i]:

        m_l = sum_h table[h, i] * weight_h(angle(xi')).
    """
    ks, table, _ = _radial_table(params, profile, omega, rho, zeta, l, tol, max_panels)
    return ks, table


def _angle_weights(omega, angle):
    hs = _harmonics(omega)
    angle = np.asarray(angle, dtype=float)
    return np.array([a * np.cos(k * angle) + b * np.sin(k * angle) for k, a, b in hs])


def default_method(params: OperatorParams, omega) -> str:
    """"radial" where it applies (n = 2, trigonometric kernel), else "polar"."""
    return "radial" if params.n == 2 and isinstance(omega, KernelOmega) else "polar"


def piece_bound(params: OperatorParams, l: int, lam: float | None = None) -> float:
    """Reference size of |m_l|.

    Without ``lam`` this is 2^((alpha - beta/2) l) for l >= 0 and 2^(alpha l)
    for l < 0.  With ``lam`` it is 2^(alpha l) min(1, lam^-1/2), the bound
    the case analysis gives on each patch.
    """
    a = params.alpha
    if lam is None:
        return 2.0 ** ((a - params.beta / 2) * l) if l >= 0 else 2.0 ** (a * l)
    return 2.0 ** (a * l) * min(1.0, lam ** -0.5)


@dataclass
class MultiplierSum:
    value: complex
    tail_bound: float
    l_min: int
    l_max: int
    pieces: dict = field(default_factory=dict)
    tail_bound_lambda: float | None = None
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "abs": abs(self.value),
                "tail_bound": self.tail_bound, "tail_bound_lambda": self.tail_bound_lambda,
                "l_min": self.l_min, "l_max": self.l_max, "skipped": list(self.skipped)}


def _geometric_tail(params, c, l_min, l_max):
    a, d = params.alpha, params.alpha - params.beta / 2
    if d >= 0:
        raise NonconvergentTail("beta <= 2 alpha: the l >= 0 pieces are not summable")
    hi = 2.0 ** (d * (l_max + 1)) / (1 - 2.0 ** d)
    lo = 2.0 ** (a * (l_min - 1)) / (1 - 2.0 ** (-a))
    return c * (hi + lo)


def m_total(params: OperatorParams, profile: RadialProfile, omega, xi: Frequency,
            l_min: int = -20, l_max: int = 20, tol: float = 1e-8,
            method: str = "polar") -> MultiplierSum:
    """Sum of m_l over l_min..l_max with a geometric bound on the rest.

    The tail constant is the largest observed |m_l| / piece_bound(l) in
    the window.
    """
    if not l_min < 0 < l_max:
        raise ValueError("need l_min < 0 < l_max")
    pieces = {l: m_l(params, profile, omega, xi, l, tol, method) for l in range(l_min, l_max + 1)}
    c = max(abs(v) / piece_bound(params, l) for l, v in pieces.items())
    value = complex(math.fsum(v.real for v in pieces.values()),
                    math.fsum(v.imag for v in pieces.values()))
    return MultiplierSum(value, _geometric_tail(params, c, l_min, l_max),
                         l_min, l_max, pieces)


def feasible_levels(params, profile, rho, zeta, lambda_budget, l_floor=-20, l_ceil=20):
    """Levels whose frequency scale stays within ``lambda_budget``."""
    out = []
    for l in range(l_floor, l_ceil + 1):
        osc, s, a_l, b_l = lambda_parts(params, profile, l)
        if max(osc, s * rho, abs(zeta) * a_l, abs(zeta) * b_l) <= lambda_budget:
            out.append(l)
    return out


def _lambda_of(params, profile, rho, zeta, l):
    osc, s, a_l, b_l = lambda_parts(params, profile, l)
    z = abs(zeta)
    return np.maximum(np.maximum(osc, s * rho), np.maximum(z * a_l, z * b_l))


def _lambda_tail(params, profile, rho, zeta, lambda_budget, l_floor, l_ceil, c_lam,
                 horizon=60):
    """c_lam * sum of 2^(alpha l) min(1, lambda_l^-1/2) over the levels left out.

    Vectorized over frequencies.  A level is computed when its lambda fits
    the budget and it lies in [l_floor, l_ceil].  Every other level within
    ``horizon`` of the computed range is summed explicitly; beyond that the
    terms are dominated by 2^(alpha l) (below) and 2^((alpha - beta/2) l)
    (above), whose geometric remainders are added in closed form.
    Frequencies with no computed level get ``inf``.
    """
    a, d = params.alpha, params.alpha - params.beta / 2
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    zeta = np.broadcast_to(np.asarray(zeta, dtype=float), rho.shape)
    c_lam = np.broadcast_to(np.asarray(c_lam, dtype=float), rho.shape)
    lo = np.full(rho.shape, np.iinfo(np.int64).max)
    hi = np.full(rho.shape, np.iinfo(np.int64).min)
    for l in range(l_floor, l_ceil + 1):
        ok = _lambda_of(params, profile, rho, zeta, l) <= lambda_budget
        lo = np.where(ok, np.minimum(lo, l), lo)
        hi = np.where(ok, np.maximum(hi, l), hi)
    found = hi >= lo
    lo = np.where(found, lo, 0)
    hi = np.where(found, hi, 0)
    total = np.zeros(rho.shape)
    for l in range(l_floor - horizon, l_ceil + horizon + 1):
        lam = _lambda_of(params, profile, rho, zeta, l)
        skip = ~((lam <= lambda_budget) & (l_floor <= l) & (l <= l_ceil))
        near = (l >= lo - horizon) & (l <= hi + horizon)
        total += np.where(skip & near, 2.0 ** (a * l) * np.minimum(1.0, lam ** -0.5), 0.0)
    total += 2.0 ** (a * (lo - horizon - 1)) / (1 - 2.0 ** (-a))
    total += 2.0 ** (d * (hi + horizon + 1)) / (1 - 2.0 ** d)
    return np.where(found, c_lam * total, np.inf)


def m_total_adaptive(params: OperatorParams, profile: RadialProfile, omega, xi: Frequency,
                     tol: float = 1e-8, lambda_budget: float = 1e4, l_floor: int = -20,
                     l_ceil: int = 20, method: str | None = None) -> MultiplierSum:
    """Sum of the pieces whose lambda fits the budget, with two tail bounds.

    ``tail_bound`` is the geometric bound over the levels outside the
    computed range, and ``tail_bound_lambda`` uses the sharper per-level
    size 2^(alpha l) min(1, lambda^-1/2) with a constant fitted on the
    computed pieces.
    """
    method = method or default_method(params, omega)
    levels = feasible_levels(params, profile, xi.rho, xi.xi_last, lambda_budget, l_floor, l_ceil)
    if not levels:
        raise DegenerateData("no dyadic level fits the lambda budget")
    pieces = {l: m_l(params, profile, omega, xi, l, tol, method) for l in levels}
    c = max(abs(v) / piece_bound(params, l) for l, v in pieces.items())
    c_lam = max(abs(v) / piece_bound(params, l, lambda_scale(params, profile, xi, l))
                for l, v in pieces.items())
    value = complex(math.fsum(v.real for v in pieces.values()),
                    math.fsum(v.imag for v in pieces.values()))
    skipped = [l for l in range(min(levels), max(levels) + 1) if l not in pieces]
    tail = _geometric_tail(params, c, min(levels), max(levels))
    tail_lam = float(_lambda_tail(params, profile, xi.rho, xi.xi_last, lambda_budget,
                                  l_floor, l_ceil, c_lam)[0])
    return MultiplierSum(value, tail, min(levels), max(levels), pieces, tail_lam, skipped)


def multiplier_values(params: OperatorParams, profile: RadialProfile, omega, xis,
                      l_window=None, tol: float = 1e-8, lambda_budget: float | None = None,
                      l_floor: int = -20, l_ceil: int = 20, progress=None):
    """m summed over dyadic levels at many frequencies via the radial route.

    Parameters
    ----------
    xis : array (N, 3)
        Rows (xi_1, xi_2, xi_last).
    l_window : (int, int), optional
        Fixed inclusive level range.  Otherwise every level in
        [l_floor, l_ceil] whose lambda fits ``lambda_budget`` is used, per
        frequency.

    Returns
    -------
    values : complex array (N,)
    info : dict with ``levels_used`` (N,) counts and, for budgeted runs,
        ``tail_bound_lambda`` (N,).
    """
    xis = np.asarray(xis, dtype=float).reshape(-1, 3)
    rho_all = np.hypot(xis[:, 0], xis[:, 1])
    ang_all = np.arctan2(xis[:, 1], xis[:, 0])
    values = np.zeros(len(xis), dtype=complex)
    count = np.zeros(len(xis), dtype=int)
    if l_window is not None:
        levels = list(range(l_window[0], l_window[1] + 1))
    else:
        if lambda_budget is None:
            raise ValueError("give l_window or lambda_budget")
        levels = list(range(l_floor, l_ceil + 1))
    weights = _angle_weights(omega, ang_all)            # (H, N)
    ratio_fit = np.zeros(len(xis))
    zetas, inverse = np.unique(xis[:, 2], return_inverse=True)
    for zi, zeta in enumerate(zetas):
        rows = np.flatnonzero(inverse == zi)
        rhos, rinv = np.unique(rho_all[rows], return_inverse=True)
        for l in levels:
            if l_window is None:
                lam = _lambda_of(params, profile, rhos, zeta, l)
                ok = lam <= lambda_budget
            else:
                lam = None
                ok = np.ones(rhos.size, dtype=bool)
            if not ok.any():
                continue
            _, table = radial_pieces(params, profile, omega, rhos[ok], zeta, l, tol)
            full = np.zeros((table.shape[0], rhos.size), dtype=complex)
            full[:, ok] = table
            piece = np.einsum("hn,hn->n", full[:, rinv], weights[:, rows])
            values[rows] += piece
            used = ok[rinv]
            count[rows] += used
            if lam is not None:
                b = 2.0 ** (params.alpha * l) * np.minimum(1.0, lam[rinv] ** -0.5)
                ratio_fit[rows] = np.where(used, np.maximum(ratio_fit[rows], np.abs(piece) / b),
                                           ratio_fit[rows])
        if progress is not None:
            progress(zi + 1, len(zetas))
    info = {"levels_used": count}
    if l_window is None:
        info["tail_bound_lambda"] = _lambda_tail(params, profile, rho_all, xis[:, 2],
                                                 lambda_budget, l_floor, l_ceil, ratio_fit)
    return values, info


@dataclass
class LatticeResult:
    """Multiplier values on a frequency list from :func:`lattice_pieces`."""

    total: np.ndarray
    pieces: dict
    levels_used: np.ndarray
    tail_bound_lambda: np.ndarray | None = None


def _gl_nodes(a, b, n_panels):
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return ((mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel())


def lattice_pieces(params: OperatorParams, profile: RadialProfile, omega, xis, levels,
                   lambda_budget: float | None = None, cycles_per_panel: float = 2.0,
                   min_panels: int = 32, keep_pieces: bool = False, chunk: int = 8192,
                   progress=None) -> LatticeResult:
    """Sum of m_l over ``levels`` at many frequencies with a fixed Gauss rule.

    Each level uses one composite 16-point Gauss-Legendre rule in r whose
    panels span at most ``cycles_per_panel`` turns of the phase for every
    included frequency.  The Bessel factors depend only on |xi'| and the
    phase factors only on xi_last, so every level costs one Bessel table
    and one matrix product.  With ``lambda_budget`` a frequency skips the
    levels whose lambda exceeds it; the remainder is reported through
    ``tail_bound_lambda`` (see :func:`m_total_adaptive`).
    """
    if params.n != 2:
        raise InvalidKernel("lattice evaluation is implemented for n = 2")
    xis = np.asarray(xis, dtype=float).reshape(-1, 3)
    rho_all = np.hypot(xis[:, 0], xis[:, 1])
    weights = _angle_weights(omega, np.arctan2(xis[:, 1], xis[:, 0]))     # (H, N)
    ks = [k for k, _, _ in _harmonics(omega)]
    phase_k = np.array([(-1j) ** k for k in ks])
    zetas, zi = np.unique(xis[:, 2], return_inverse=True)
    rhos, ri = np.unique(rho_all, return_inverse=True)
    a, b = params.alpha, params.beta
    total = np.zeros(len(xis), dtype=complex)
    count = np.zeros(len(xis), dtype=int)
    fit = np.zeros(len(xis))
    pieces = {}
    levels = list(levels)
    for step, l in enumerate(levels):
        s = 2.0 ** (-l)
        osc = 2.0 ** (b * l)
        if lambda_budget is None:
            inc = np.ones((zetas.size, rhos.size), dtype=bool)
        else:
            inc = _lambda_of(params, profile, rhos[None, :], zetas[:, None], l) <= lambda_budget
        zu = np.flatnonzero(inc.any(axis=1))
        if zu.size == 0:
            continue
        ru = np.flatnonzero(inc[zu].any(axis=0))
        bound = max(_r_gradient_bound(params, profile, 0.0, zetas[z], l)
                    + s * rhos[inc[z]].max() for z in zu)
        n_panels = max(min_panels, int(math.ceil(bound * 1.5 / cycles_per_panel)))
        r, w = _gl_nodes(0.5, 2.0, n_panels)
        amp = w * eta(r) * r ** (-a - 1)
        table = np.zeros((len(ks), zu.size, ru.size), dtype=complex)
        for c in range(0, r.size, chunk):
            rc = r[c:c + chunk]
            p0 = profile.derivatives(s * rc)[0]
            ph = zetas[zu, None] * p0[None, :] + osc * rc[None, :] ** (-b)
            e = np.exp(-2j * math.pi * ph) * amp[None, c:c + chunk]
            z = TWO_PI * s * rc[:, None] * rhos[None, ru]
            for h, k in enumerate(ks):
                bk = _bessel(k, z)
                table[h] += (e.real @ bk) + 1j * (e.imag @ bk)
        table *= (2.0 ** (a * l) * TWO_PI) * phase_k[:, None, None]
        zpos = np.full(zetas.size, -1)
        zpos[zu] = np.arange(zu.size)
        rpos = np.full(rhos.size, -1)
        rpos[ru] = np.arange(ru.size)
        use = inc[zi, ri]
        piece = np.zeros(len(xis), dtype=complex)
        idx = np.flatnonzero(use)
        piece[idx] = np.einsum("hn,hn->n", table[:, zpos[zi[idx]], rpos[ri[idx]]],
                               weights[:, idx])
        total += piece
        count += use
        if lambda_budget is not None:
            lam = _lambda_of(params, profile, rho_all[idx], xis[idx, 2], l)
            ref = 2.0 ** (a * l) * np.minimum(1.0, lam ** -0.5)
            fit[idx] = np.maximum(fit[idx], np.abs(piece[idx]) / ref)
        if keep_pieces:
            pieces[l] = piece
        if progress is not None:
            progress(step + 1, len(levels))
    tails = None
    if lambda_budget is not None:
        tails = _lambda_tail(params, profile, rho_all, xis[:, 2], lambda_budget,
                             min(levels), max(levels), fit)
    return LatticeResult(total, pieces, count, tails)


def cartesian_oracle(params: OperatorParams, profile: RadialProfile, omega: KernelOmega,
                     xi: Frequency, l: int, n_r: int = 4096, n_u: int = 4096) -> complex:
    """Unscaled, unrotated brute-force value of m_l for n = 2.

    Integrates exp(-2 pi i (xi'.t + xi_last phi(|t|) + |t|^-beta))
    eta(2^l |t|) Omega(t/|t|) |t|^(-alpha-2) over t in R^2 in absolute
    polar coordinates (t = r (cos u, sin u)): composite Simpson in r over
    [2^(-l-1), 2^(-l+1)] and the periodic trapezoid rule in u.
    """
    from .quadrature import simpson_weights

    r, wr = simpson_weights(2.0 ** (-l - 1), 2.0 ** (-l + 1), n_r)
    u = TWO_PI * np.arange(n_u) / n_u
    cu, su = np.cos(u), np.sin(u)
    om = omega(u)
    x1, x2 = xi.xi_prime[0], xi.xi_prime[1]
    radial = eta(2.0 ** l * r) * r ** (-params.alpha - 2) * r       # includes dt = r dr du
    ph_r = xi.xi_last * profile.derivatives(r)[0] + r ** (-params.beta)
    total = 0j
    chunk = 256
    for i in range(0, r.size, chunk):
        rr = r[i:i + chunk, None]
        ph = rr * (x1 * cu + x2 * su)[None, :] + ph_r[i:i + chunk, None]
        vals = np.exp(-2j * math.pi * ph) @ om
        total += complex(np.dot(wr[i:i + chunk] * radial[i:i + chunk], vals))
    return total * TWO_PI / n_u


@dataclass
class DecayFit:
    l_values: list
    log2_abs_ml: list
    fitted_slope: float
    fitted_intercept: float
    predicted_slope: float
    max_ratio_excess: float
    anchor: int = 0
    excluded: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def decay_fit(params: OperatorParams, profile: RadialProfile, omega, xi: Frequency,
              l_range, tol: float = 1e-8, method: str | None = None) -> DecayFit:
    """Fit log2 |m_l| against l on a window lying entirely on one side of 0.

    ``max_ratio_excess`` is max_l |m_l| 2^(-c l) divided by the same
    quantity at the window end nearest l = 0, with c = alpha - beta/2 on
    l >= 0 windows and c = alpha on l < 0 windows.
    """
    method = method or default_method(params, omega)
    l0, l1 = l_range
    if l1 - l0 < 4:
        raise ValueError("window must span at least 5 levels")
    if l0 >= 0:
        pred, anchor = params.alpha - params.beta / 2, l0
    elif l1 < 0:
        pred, anchor = params.alpha, l1
    else:
        raise ValueError("window must not straddle l = 0")
    ls, logs, excluded = [], [], []
    for l in range(l0, l1 + 1):
        v = abs(m_l(params, profile, omega, xi, l, tol, method))
        if v < 1e-30:
            excluded.append(l)
            continue
        ls.append(l)
        logs.append(math.log2(v))
    if anchor in excluded or len(ls) < 2:
        raise DegenerateData(f"|m_l| underflows at levels {excluded}")
    slope, intercept = np.polyfit(ls, logs, 1)
    excess = [lg - pred * l for l, lg in zip(ls, logs)]
    ref = excess[ls.index(anchor)]
    return DecayFit(ls, logs, float(slope), float(intercept), pred,
                    float(2.0 ** (max(excess) - ref)), anchor, excluded)


@dataclass
class EnvelopeReport:
    fitted_exponent: dict
    predicted_exponent: dict
    ratios: dict
    constants: dict
    passed: bool
    samples: list

    def to_dict(self) -> dict:
        return asdict(self)


def sobolev_envelope(params: OperatorParams, k3: float, profile: RadialProfile, omega,
                     xi_samples, tol: float = 1e-8, lambda_budget: float = 1e4,
                     slack: float = 10.0, l_floor: int = -20, l_ceil: int = 20
                     ) -> EnvelopeReport:
    """Check |m(xi)| <= slack * C |xi|^e on the xi'- and xi_last-dominant groups.

    C is fixed by the smallest-|xi| sample of each group, and e is
    (alpha - beta/2)/(1 + beta) or (alpha - beta/2)/(beta + k3 + 2).  The
    check is applied to |m| plus the reported tail bound of the levels that
    were not computed, so skipped levels cannot hide a violation.
    """
    e_prime, e_last = params.envelope_exponents(k3)
    groups = {"xi_prime": [], "xi_last": []}
    for xi in xi_samples:
        groups["xi_prime" if xi.rho >= abs(xi.xi_last) else "xi_last"].append(xi)
    pred = {"xi_prime": e_prime, "xi_last": e_last}
    fitted, ratios, consts, samples = {}, {}, {}, []
    ok = True
    for name, xs in groups.items():
        if not xs:
            continue
        xs = sorted(xs, key=lambda x: (x.norm, x.as_tuple()))
        vals, tails = [], []
        for xi in xs:
            res = m_total_adaptive(params, profile, omega, xi, tol, lambda_budget,
                                   l_floor, l_ceil)
            vals.append(abs(res.value))
            tails.append(res.tail_bound_lambda)
            samples.append({"group": name, "xi": list(xi.as_tuple()), "abs_m": abs(res.value),
                            "tail_bound_lambda": res.tail_bound_lambda,
                            "l_min": res.l_min, "l_max": res.l_max})
        norms = np.array([x.norm for x in xs])
        vals = np.array(vals)
        c = vals[0] / norms[0] ** pred[name]
        r = (vals + np.array(tails)) / (c * norms ** pred[name])
        if len(xs) >= 2 and np.all(vals > 0):
            fitted[name] = float(np.polyfit(np.log(norms), np.log(vals), 1)[0])
        ratios[name] = r.tolist()
        consts[name] = float(c)
        ok = ok and bool(np.all(r <= slack))
    return EnvelopeReport(fitted, pred, ratios, consts, ok, samples)
