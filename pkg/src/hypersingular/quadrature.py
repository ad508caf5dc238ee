"""Phase-resolved panel quadrature for smooth oscillatory integrands.

The domain is cut into panels small enough that the phase turns by at most
about two cycles across each one, given a caller-supplied bound on the
phase gradient (in cycles per unit length).  Every panel is integrated with
a 16-point Gauss-Legendre rule and again as its bisected children; panels
whose two values disagree by more than their share of ``tol`` are replaced
by their children, whose values are already known.

Summation runs over arrays in a fixed order, so results are bitwise
reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded

__all__ = ["QuadratureResult", "integrate_oscillatory", "integrate_oscillatory_1d",
           "brute_force_oracle", "simpson_weights", "DEFAULT_DOMAIN", "MAX_PANELS"]

GL_ORDER = 16
MAX_PANELS = 2 ** 22
DEFAULT_DOMAIN = ((0.5, 2.0), (0.0, math.pi))
_X, _W = np.polynomial.legendre.leggauss(GL_ORDER)
_BATCH_2D = 1024
_BATCH_1D = 65536


@dataclass
class QuadratureResult:
    value: complex
    error_estimate: float
    panels_used: int
    oracle: bool = False


def _panel_count(bound, length, min_panels):
    return max(min_panels, int(math.ceil(bound * length / 2.0)))


def _split_bound(bound):
    if np.ndim(bound) == 0:
        return float(bound), float(bound)
    br, bt = bound
    return float(br), float(bt)


def _nodes(a, b):
    """Gauss nodes and weights for each row of panel endpoints a, b."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return mid[:, None] + half[:, None] * _X[None, :], half[:, None] * _W[None, :]


def _rule_2d(f, r0, r1, t0, t1):
    xr, wr = _nodes(r0, r1)
    xt, wt = _nodes(t0, t1)
    vals = f(xr[:, :, None], xt[:, None, :])
    vals = np.broadcast_to(vals, xr.shape + (GL_ORDER,))
    return np.einsum("pi,pij,pj->p", wr, vals, wt)


def _children_2d(r0, r1, t0, t1):
    rm, tm = 0.5 * (r0 + r1), 0.5 * (t0 + t1)
    cr0 = np.concatenate([r0, r0, rm, rm])
    cr1 = np.concatenate([rm, rm, r1, r1])
    ct0 = np.concatenate([t0, tm, t0, tm])
    ct1 = np.concatenate([tm, t1, tm, t1])
    return cr0, cr1, ct0, ct1


def integrate_oscillatory(integrand, phase_gradient_bound, tol: float,
                          domain=DEFAULT_DOMAIN, max_panels: int = MAX_PANELS,
                          min_panels: int = 8, max_depth: int = 10) -> QuadratureResult:
    """Integrate ``integrand(r, theta)`` over a rectangle.

    Parameters
    ----------
    integrand : callable
        Vectorized complex function of broadcastable arrays ``r``, ``theta``.
    phase_gradient_bound : float or (float, float)
        Bound on |d phase| in cycles per unit length, either one value for
        both axes or one per axis.
    tol : float
        Absolute tolerance, shared between panels in proportion to area.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    (ra, rb), (ta, tb) = domain
    br, bt = _split_bound(phase_gradient_bound)
    if br < 0 or bt < 0:
        raise ValueError("phase_gradient_bound must be >= 0")
    nr = _panel_count(br, rb - ra, min_panels)
    nt = _panel_count(bt, tb - ta, min_panels)
    if nr * nt > max_panels:
        raise BudgetExceeded(nr * nt, max_panels)

    er = np.linspace(ra, rb, nr + 1)
    et = np.linspace(ta, tb, nt + 1)
    R0, T0 = np.meshgrid(er[:-1], et[:-1], indexing="ij")
    R1, T1 = np.meshgrid(er[1:], et[1:], indexing="ij")
    r0, r1, t0, t1 = (a.ravel() for a in (R0, R1, T0, T1))
    coarse = np.concatenate([_rule_2d(integrand, *(x[i:i + _BATCH_2D] for x in (r0, r1, t0, t1)))
                             for i in range(0, r0.size, _BATCH_2D)])
    share = tol / (nr * nt)
    total = 0j
    err = 0.0
    used = nr * nt
    depth = 0
    while r0.size:
        c = _children_2d(r0, r1, t0, t1)
        m = r0.size
        kids = np.concatenate([_rule_2d(integrand, *(x[i:i + _BATCH_2D] for x in c))
                               for i in range(0, 4 * m, _BATCH_2D)])
        fine = kids[:m] + kids[m:2 * m] + kids[2 * m:3 * m] + kids[3 * m:]
        diff = np.abs(fine - coarse)
        done = (diff <= share) | (depth >= max_depth)
        total += np.sum(fine[done])
        err += float(np.sum(diff[done]))
        if done.all():
            break
        keep = np.tile(~done, 4)
        r0, r1, t0, t1 = (x[keep] for x in c)
        coarse = kids[keep]
        used += 3 * int((~done).sum())
        if used > max_panels:
            raise BudgetExceeded(used, max_panels)
        share /= 4
        depth += 1
    return QuadratureResult(complex(total), err, used)


def _rule_1d(f, a, b):
    x, w = _nodes(a, b)
    vals = np.asarray(f(x.ravel()))
    vals = vals.reshape(x.shape + vals.shape[1:])
    return np.einsum("pi,pi...->p...", w, vals)


def integrate_oscillatory_1d(integrand, interval, phase_gradient_bound: float,
                             tol: float, max_panels: int = MAX_PANELS,
                             min_panels: int = 8, max_depth: int = 30
                             ) -> QuadratureResult:
    """One-dimensional version with vector-valued integrands.

    ``integrand(x)`` takes a 1-D array of nodes and returns an array whose
    leading axis runs over the nodes; the remaining axes are integrated
    independently and a panel is refined when any component misses its
    tolerance share.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    a, b = interval
    n = _panel_count(float(phase_gradient_bound), b - a, min_panels)
    if n > max_panels:
        raise BudgetExceeded(n, max_panels)
    edges = np.linspace(a, b, n + 1)
    p0, p1 = edges[:-1], edges[1:]

    def batched(lo, hi):
        return np.concatenate([_rule_1d(integrand, lo[i:i + _BATCH_1D], hi[i:i + _BATCH_1D])
                               for i in range(0, lo.size, _BATCH_1D)])

    coarse = batched(p0, p1)
    share = tol / n
    total = np.zeros(coarse.shape[1:], dtype=complex)
    err = 0.0
    used = n
    depth = 0
    while p0.size:
        mid = 0.5 * (p0 + p1)
        m = p0.size
        kids = batched(np.concatenate([p0, mid]), np.concatenate([mid, p1]))
        fine = kids[:m] + kids[m:]
        diff = np.abs(fine - coarse)
        worst = diff.reshape(m, -1).max(axis=1) if diff.ndim > 1 else diff
        done = (worst <= share) | (depth >= max_depth)
        total = total + np.sum(fine[done], axis=0)
        err += float(np.sum(worst[done]))
        if done.all():
            break
        keep = np.tile(~done, 2)
        p0 = np.concatenate([p0, mid])[keep]
        p1 = np.concatenate([mid, p1])[keep]
        coarse = kids[keep]
        used += int((~done).sum())
        if used > max_panels:
            raise BudgetExceeded(used, max_panels)
        share /= 2
        depth += 1
    value = complex(total) if total.ndim == 0 else total
    return QuadratureResult(value, err, used)


def simpson_weights(a: float, b: float, n: int):
    """Nodes and composite Simpson weights; even ``n`` is bumped to n + 1."""
    if n < 2:
        raise ValueError("need at least 2 points")
    if n % 2 == 0:
        n += 1
    x = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * h / 3.0


def brute_force_oracle(integrand, n_r: int, n_theta: int, domain=DEFAULT_DOMAIN,
                       chunk: int = 256) -> QuadratureResult:
    """Composite Simpson rule on a uniform grid; slow but independent."""
    (ra, rb), (ta, tb) = domain
    xr, wr = simpson_weights(ra, rb, n_r)
    xt, wt = simpson_weights(ta, tb, n_theta)
    total = 0j
    for i in range(0, xr.size, chunk):
        vals = integrand(xr[i:i + chunk, None], xt[None, :])
        vals = np.broadcast_to(vals, (min(chunk, xr.size - i), xt.size))
        total += complex(wr[i:i + chunk] @ (vals @ wt))
    return QuadratureResult(total, 0.0, 1, oracle=True)
