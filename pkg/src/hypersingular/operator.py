"""Applying the operator to functions on R^3 and measuring norms.

Two application paths are provided.  The spectral path multiplies the DFT
of a periodic grid function by the multiplier sampled on the frequency
lattice k / L.  The direct path evaluates the defining integral

    Rf(x) = int f(x - (t, phi(|t|))) exp(-2 pi i |t|^-beta) Omega(t) |t|^(-alpha-2) dt

for a closed-form f by polar quadrature over a truncated range of |t|.
On a periodic grid the spectral path computes the operator applied to the
periodization of f, so the direct path can wrap its arguments into the box
to compute the same quantity.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import roots_hermitenorm

from .bumps import eta
from .errors import DegenerateData, InvalidParams, SpectralLeakage
from .multiplier import lattice_pieces
from .params import OperatorParams
from .profiles import RadialProfile
from .quadrature import integrate_oscillatory, integrate_oscillatory_1d

__all__ = ["GridFunction", "MultiplierTable", "build_multiplier_table", "apply_spectral",
           "adjoint_apply_spectral", "spectral_tail", "apply_direct", "lp_norm",
           "sobolev_norm", "ModulatedGaussian", "lp_sweep", "l1_dyadic_check",
           "sobolev_smoothing_check", "save_table", "load_table", "content_hash",
           "window_weight", "smoke_crossvalidation", "SweepRow"]

TWO_PI = 2 * math.pi
TABLE_MAGIC = b"OSCM"
TABLE_VERSION = 1
LEAKAGE_THRESHOLD = 1e-6


@dataclass(frozen=True)
class GridFunction:
    """Samples on the periodic box [-L/2, L/2)^d, node j at -L/2 + j L/N."""

    dims: tuple
    box_length: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if any(n < 8 or n % 2 for n in dims):
            raise InvalidParams(f"grid sizes must be even and >= 8, got {dims}")
        if not self.box_length > 0:
            raise InvalidParams("box_length must be positive")
        a = np.array(self.samples, dtype=complex).reshape(dims)
        if not np.all(np.isfinite(a)):
            raise InvalidParams("samples must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "box_length", float(self.box_length))
        object.__setattr__(self, "samples", a)

    @classmethod
    def from_function(cls, f, dims, box_length) -> "GridFunction":
        """Sample ``f(*coords)`` on the grid; f must accept broadcast arrays."""
        axes = grid_axes(dims, box_length)
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(dims, box_length, np.broadcast_to(f(*mesh), tuple(dims)))

    @property
    def spacing(self) -> float:
        return self.box_length / self.dims[0]

    @property
    def cell_volume(self) -> float:
        return float(np.prod([self.box_length / n for n in self.dims]))

    def axes(self):
        return grid_axes(self.dims, self.box_length)

    def frequencies(self):
        """Lattice frequency vectors, shape dims + (d,), in FFT order."""
        ks = [np.fft.fftfreq(n, self.box_length / n) for n in self.dims]
        return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(self.dims, self.box_length, samples)

    def point_index(self, x):
        """Grid index of the node at x (which must be a node)."""
        h = [self.box_length / n for n in self.dims]
        idx = [(xi + self.box_length / 2) / hi for xi, hi in zip(x, h)]
        out = tuple(int(round(i)) % n for i, n in zip(idx, self.dims))
        if max(abs(i - round(i)) for i in idx) > 1e-9:
            raise InvalidParams(f"{tuple(x)} is not a grid node")
        return out


def grid_axes(dims, box_length):
    return [-box_length / 2 + np.arange(n) * (box_length / n) for n in dims]


def content_hash(obj) -> str:
    """sha256 of the canonical JSON encoding of ``obj``."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(blob.encode()).hexdigest()


def _json_default(o):
    if hasattr(o, "to_dict"):
        return o.to_dict()
    if isinstance(o, (np.integer, np.floating)):
        return o.item()
    raise TypeError(f"cannot encode {type(o).__name__}")


@dataclass(frozen=True)
class MultiplierTable:
    """Multiplier values on the lattice of a grid, in FFT order."""

    dims: tuple
    box_length: float
    values: np.ndarray = field(repr=False)
    key: str = ""
    tail_bound_lambda: np.ndarray | None = field(default=None, repr=False)

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def check_grid(self, f: GridFunction):
        if tuple(f.dims) != tuple(self.dims) or f.box_length != self.box_length:
            raise InvalidParams("multiplier table was built for a different grid")


def table_key(params, profile, omega, dims, box_length, levels, lambda_budget) -> str:
    return content_hash({"params": params, "profile": profile, "omega": omega,
                         "dims": list(dims), "box_length": box_length,
                         "levels": list(levels), "lambda_budget": lambda_budget})


def build_multiplier_table(params: OperatorParams, profile: RadialProfile, omega, dims,
                           box_length: float, levels=range(-20, 21),
                           lambda_budget: float | None = 2e3, cache_dir=None,
                           progress=None) -> MultiplierTable:
    """Evaluate sum_l m_l on every lattice frequency of the grid.

    With ``cache_dir`` the table is read from / written to
    ``<cache_dir>/<key>.oscm``, keyed by a content hash of everything the
    values depend on.  Cached values are stored as complex64.
    """
    dims = tuple(int(n) for n in dims)
    levels = list(levels)
    key = table_key(params, profile, omega, dims, box_length, levels, lambda_budget)
    path = Path(cache_dir) / f"{key}.oscm" if cache_dir is not None else None
    if path is not None and path.exists():
        values = load_table(path, key)[0]
        return MultiplierTable(dims, float(box_length), values.astype(complex), key)
    grid = GridFunction(dims, box_length, np.zeros(dims))
    xis = grid.frequencies().reshape(-1, 3)
    res = lattice_pieces(params, profile, omega, xis, levels, lambda_budget=lambda_budget,
                         progress=progress)
    values = res.total.reshape(dims)
    tails = None if res.tail_bound_lambda is None else res.tail_bound_lambda.reshape(dims)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_table(path, values, dims, box_length, key)
    return MultiplierTable(dims, float(box_length), values, key, tails)


def save_table(path, values, dims, box_length: float, key: str):
    """Write the binary cache layout: header then little-endian complex64."""
    digest = bytes.fromhex(key)
    if len(digest) != 32:
        raise ValueError("key must be a sha256 hex digest")
    with open(path, "wb") as fh:
        fh.write(TABLE_MAGIC)
        fh.write(struct.pack("<I", TABLE_VERSION))
        fh.write(struct.pack("<I", len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        fh.write(struct.pack("<d", float(box_length)))
        fh.write(digest)
        fh.write(np.ascontiguousarray(values, dtype="<c8").tobytes())


def load_table(path, expected_key: str | None = None):
    """Read a cache file; returns ``(values, dims, box_length, key)``."""
    with open(path, "rb") as fh:
        if fh.read(4) != TABLE_MAGIC:
            raise DegenerateData(f"{path} is not a multiplier table")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != TABLE_VERSION:
            raise DegenerateData(f"unsupported table version {version}")
        (nd,) = struct.unpack("<I", fh.read(4))
        dims = struct.unpack(f"<{nd}I", fh.read(4 * nd))
        (box,) = struct.unpack("<d", fh.read(8))
        key = fh.read(32).hex()
        data = np.frombuffer(fh.read(), dtype="<c8")
    if expected_key is not None and key != expected_key:
        raise DegenerateData("table content hash does not match")
    if data.size != int(np.prod(dims)):
        raise DegenerateData("table is truncated")
    return data.reshape(dims), tuple(dims), box, key


def spectral_tail(f: GridFunction, fraction: float = 0.75) -> float:
    """Share of the energy at lattice frequencies beyond ``fraction`` of Nyquist
    in any coordinate."""
    spec = np.abs(np.fft.fftn(f.samples)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    xi = f.frequencies()
    nyq = np.array([n / (2 * f.box_length) for n in f.dims])
    outer = np.any(np.abs(xi) > fraction * nyq, axis=-1)
    return float(spec[outer].sum() / total)


def _apply(f, values, check):
    if check:
        tail = spectral_tail(f)
        if tail > LEAKAGE_THRESHOLD:
            warnings.warn(f"spectral tail {tail:.2e} exceeds {LEAKAGE_THRESHOLD:g} of the "
                          "energy", SpectralLeakage, stacklevel=3)
    return f.with_samples(np.fft.ifftn(values * np.fft.fftn(f.samples)))


def apply_spectral(f: GridFunction, table: MultiplierTable, check_leakage: bool = True
                   ) -> GridFunction:
    """(m * f^)^v on the periodic grid."""
    table.check_grid(f)
    return _apply(f, table.values, check_leakage)


def adjoint_apply_spectral(g: GridFunction, table: MultiplierTable,
                           check_leakage: bool = True) -> GridFunction:
    """(conj(m) * g^)^v, the adjoint for the discrete pairing."""
    table.check_grid(g)
    return _apply(g, np.conj(table.values), check_leakage)


def lp_norm(f: GridFunction, p: float) -> float:
    if not 1 <= p < math.inf:
        raise InvalidParams("p must lie in [1, inf)")
    return float((np.sum(np.abs(f.samples) ** p) * f.cell_volume) ** (1 / p))


def sobolev_norm(f: GridFunction, s: float) -> float:
    """L^2 norm of ((1 + |xi|^2)^(s/2) f^)^v on the lattice."""
    if s == 0:
        return lp_norm(f, 2)
    w = (1 + np.sum(f.frequencies() ** 2, axis=-1)) ** (s / 2)
    hat = np.fft.fftn(f.samples)
    # discrete Parseval: sum |f|^2 = sum |F f|^2 / N
    return float(math.sqrt(np.sum(np.abs(w * hat) ** 2) / hat.size * f.cell_volume))


def window_weight(r, levels):
    """W(r) = sum over ``levels`` of eta(2^l r)."""
    r = np.asarray(r, dtype=float)
    return sum(eta(2.0 ** l * r) for l in levels)


def apply_direct(f, x_points, params: OperatorParams, profile: RadialProfile, omega,
                 t_truncation=(0.25, 4.0), quad_density: int = 16, levels=None,
                 period: float | None = None, tol: float = 1e-9):
    """Rf at each point by polar quadrature over r_inner <= |t| <= r_outer.

    Parameters
    ----------
    f : callable
        Closed-form ``f(y1, y2, y3)`` on broadcast arrays.
    levels : iterable of int, optional
        Weight the integrand by ``window_weight(r, levels)``, which is the
        truncation the spectral path uses when its multiplier sums the same
        levels.  Without it the kernel is cut off sharply.
    period : float, optional
        Wrap the arguments of f into [-period/2, period/2) so that the result
        matches the operator on a periodic box.  Exact for f whose
        periodization equals its nearest image, as for Gaussians narrow
        compared with the box.
    quad_density : int
        Minimum number of panels per axis.
    """
    r_in, r_out = t_truncation
    if not 0 < r_in < r_out:
        raise InvalidParams("need 0 < r_inner < r_outer")
    if params.n != 2:
        raise InvalidParams("direct application is implemented for n = 2")
    a, b = params.alpha, params.beta
    levels = None if levels is None else list(levels)
    rr = np.linspace(r_in, r_out, 1025)
    p1 = np.abs(profile.derivatives(rr)[1])
    bound_r = max(b * r_in ** (-b - 1), 2 * float(p1.max()))
    bound_u = 2 * r_out + max((k for k, _, _ in omega.harmonics), default=0) / TWO_PI

    def wrap(y):
        return y if period is None else (y + period / 2) % period - period / 2

    out = []
    for x in x_points:
        x1, x2, x3 = (float(v) for v in x)

        def integrand(r, u):
            p0 = profile.derivatives(r)[0]
            w = r ** (-a - 1) * np.exp(-2j * math.pi * r ** (-b))
            if levels is not None:
                w = w * window_weight(r, levels)
            vals = f(wrap(x1 - r * np.cos(u)), wrap(x2 - r * np.sin(u)), wrap(x3 - p0))
            return vals * w * omega(u)

        res = integrate_oscillatory(integrand, (bound_r, bound_u), tol,
                                    domain=((r_in, r_out), (0.0, TWO_PI)),
                                    min_panels=quad_density)
        out.append(res.value)
    return np.array(out)


@dataclass(frozen=True)
class ModulatedGaussian:
    """exp(-pi |x - center|^2 / width^2) exp(2 pi i carrier . x)."""

    center: tuple
    carrier: tuple
    width: float = 1.0

    def __call__(self, *x):
        q = sum((xi - c) ** 2 for xi, c in zip(x, self.center))
        ph = sum(xi * k for xi, k in zip(x, self.carrier))
        return np.exp(-math.pi * q / self.width ** 2) * np.exp(2j * math.pi * ph)

    def l2_norm(self) -> float:
        d = len(self.center)
        return (self.width ** 2 / 2) ** (d / 4)


@dataclass
class SweepRow:
    index: int
    p: float
    norm_f: float
    norm_rf: float
    ratio: float


def lp_sweep(table: MultiplierTable, f_family, p_list):
    """Ratios ||Rf||_p / ||f||_p over a family; returns (rows, max ratio per p)."""
    p_list = [float(p) for p in p_list]
    for p in p_list:
        if not 1.05 <= p <= 16:
            raise InvalidParams(f"p = {p} outside [1.05, 16]")
    rows = []
    for i, f in enumerate(f_family):
        rf = apply_spectral(f, table)
        for p in p_list:
            nf, nr = lp_norm(f, p), lp_norm(rf, p)
            rows.append(SweepRow(i, p, nf, nr, nr / nf))
    best = {p: max(r.ratio for r in rows if r.p == p) for p in p_list}
    return rows, best


def l1_dyadic_check(params: OperatorParams, profile: RadialProfile, omega,
                    f: GridFunction, levels=range(0, 9), slack: float = 10.0):
    """||R_l f||_1 / (2^(alpha l) ||f||_1) per level, against slack times the
    value at the first level."""
    levels = list(levels)
    xis = f.frequencies().reshape(-1, 3)
    res = lattice_pieces(params, profile, omega, xis, levels, keep_pieces=True)
    n1 = lp_norm(f, 1)
    ratios = {}
    for l in levels:
        rl = _apply(f, res.pieces[l].reshape(f.dims), False)
        ratios[l] = lp_norm(rl, 1) / (2.0 ** (params.alpha * l) * n1)
    c0 = ratios[levels[0]]
    return {"ratios": ratios, "constant": c0,
            "pass": all(v <= slack * c0 for v in ratios.values())}


def sobolev_smoothing_check(params: OperatorParams, k3: float, profile: RadialProfile,
                            omega, s: float | None = None, ladder=range(0, 9),
                            direction=(0.3, 0.2, 0.93), width: float = 0.5,
                            n_nodes: int = 6, lambda_budget: float = 2e3,
                            slack: float = 10.0):
    """Ratios ||R f_k||_{L^2_s} / ||f_k||_2 for carriers |xi| = 2^k.

    f_k has Fourier transform exp(-pi |xi - c_k|^2 / width^2) with
    c_k = 2^k * direction / |direction|.  By Plancherel

        ratio^2 = E[ |m(xi)|^2 (1 + |xi|^2)^s ],   xi ~ N(c_k, (width^2 / 4 pi) I),

    which is evaluated with an ``n_nodes``^3 Gauss-Hermite rule, so the
    carriers need no spatial grid.
    """
    if s is None:
        s = params.s0(k3)
    if s > params.s0(k3) + 0.05:
        raise InvalidParams("s may exceed s0 by at most 0.05")
    ladder = list(ladder)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    z, w = roots_hermitenorm(n_nodes)
    w = w / w.sum()
    tau = width / math.sqrt(4 * math.pi)
    zz = np.stack(np.meshgrid(z, z, z, indexing="ij"), axis=-1).reshape(-1, 3)
    ww = np.einsum("i,j,k->ijk", w, w, w).ravel()
    pts = np.concatenate([2.0 ** k * d + tau * zz for k in ladder])
    res = lattice_pieces(params, profile, omega, pts, range(-20, 21),
                         lambda_budget=lambda_budget)
    m2 = np.abs(res.total.reshape(len(ladder), -1)) ** 2
    weight = (1 + np.sum(pts ** 2, axis=1)).reshape(len(ladder), -1) ** s
    ratios = np.sqrt(m2 * weight @ ww)
    ref = ratios[0]
    ok = bool(np.all(ratios <= slack * ref)) if s <= params.s0(k3) else None
    return {"s": s, "s0": params.s0(k3), "ladder": ladder, "ratios": ratios.tolist(),
            "reference": float(ref), "pass": ok}


def smoke_crossvalidation(alpha: float, beta: float, profile: RadialProfile,
                          sizes=(16, 32), box_length: float = 8.0, levels=(-1, 0, 1),
                          probes=((0.0, 0.0), (0.5, 0.5), (-1.0, 0.5), (1.0, -1.0)),
                          width: float = 1.0, tol: float = 1e-10):
    """Spectral against direct application for the one-dimensional analogue.

    Acts on functions on R^2 along the curve t -> (t, phi(|t|)) with the odd
    kernel Omega(+-1) = +-1:

        Rf(x) = int f(x - (t, phi(|t|))) exp(-2 pi i |t|^-beta) sign(t) W(|t|) |t|^(-alpha-1) dt,

    whose multiplier is
        -2i int sin(2 pi xi_1 r) exp(-2 pi i (xi_2 phi(r) + r^-beta)) W(r) r^(-alpha-1) dr.
    Returns the max relative disagreement at ``probes`` for each grid size.
    """
    if not beta > 2 * alpha > 0:
        raise InvalidParams("need beta > 2 alpha > 0")
    levels = list(levels)
    r_lo, r_hi = 2.0 ** (-max(levels) - 1), 2.0 ** (-min(levels) + 1)
    g = ModulatedGaussian((0.0, 0.0), (0.0, 0.0), width)
    rr = np.linspace(r_lo, r_hi, 1025)
    p1max = float(np.abs(profile.derivatives(rr)[1]).max())

    def wrap(y):
        return (y + box_length / 2) % box_length - box_length / 2

    def radial(r):
        return window_weight(r, levels) * r ** (-alpha - 1) * np.exp(-2j * math.pi * r ** (-beta))

    direct = []
    for x1, x2 in probes:
        def integrand(r):
            p0 = profile.derivatives(r)[0]
            fp = g(wrap(x1 - r), wrap(x2 - p0))
            fm = g(wrap(x1 + r), wrap(x2 - p0))
            return (fp - fm) * radial(r)

        bound = beta * r_lo ** (-beta - 1) + 2 * p1max + 2
        direct.append(integrate_oscillatory_1d(integrand, (r_lo, r_hi), bound, tol).value)
    direct = np.array(direct)
    scale = np.abs(direct).max()
    out = {}
    for n in sizes:
        f = GridFunction.from_function(g, (n, n), box_length)
        xi = f.frequencies()
        k1 = np.unique(xi[..., 0])
        k2 = np.unique(xi[..., 1])

        def mult(r):
            ph = np.exp(-2j * math.pi * k2[None, :, None] * profile.derivatives(r)[0][:, None, None])
            sn = np.sin(TWO_PI * k1[None, None, :] * r[:, None, None])
            return -2j * sn * ph * radial(r)[:, None, None]

        bound = (beta * r_lo ** (-beta - 1) + np.abs(k1).max()
                 + np.abs(k2).max() * p1max)
        m = integrate_oscillatory_1d(mult, (r_lo, r_hi), bound, tol).value   # (k2, k1)
        i2 = np.searchsorted(k2, xi[..., 1])
        i1 = np.searchsorted(k1, xi[..., 0])
        rf = f.with_samples(np.fft.ifftn(m[i2, i1] * np.fft.fftn(f.samples)))
        spec = np.array([rf.samples[rf.point_index(x)] for x in probes])
        out[n] = float(np.abs(spec - direct).max() / scale)
    return out
