import math
import warnings

import numpy as np
import pytest

from hypersingular.errors import DegenerateData, InvalidParams, SpectralLeakage
from hypersingular.kernel import KernelOmega
from hypersingular.multiplier import m_total
from hypersingular.operator import (GridFunction, ModulatedGaussian, adjoint_apply_spectral,
                                    apply_direct, apply_spectral, build_multiplier_table,
                                    l1_dyadic_check, load_table, lp_norm, lp_sweep,
                                    save_table, smoke_crossvalidation, sobolev_norm,
                                    sobolev_smoothing_check, spectral_tail)
from hypersingular.params import Frequency, OperatorParams
from hypersingular.profiles import Monomial

P = OperatorParams(2, 0.25, 1.0)
M3 = Monomial(3.0)
COS = KernelOmega(((1, 1.0, 0.0),))
DIMS = (32, 32, 32)
L = 8.0
LEVELS = range(-3, 4)


@pytest.fixture(scope="module")
def table():
    return build_multiplier_table(P, M3, COS, DIMS, L, LEVELS, lambda_budget=None)


def random_smooth(rng, dims=DIMS, box=L):
    """Random combination of wide Gaussians, so the spectrum is compact."""
    g = [ModulatedGaussian(tuple(rng.uniform(-0.5, 0.5, 3)), tuple(rng.uniform(-0.2, 0.2, 3)),
                           float(rng.uniform(1.2, 1.6))) for _ in range(3)]
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    return GridFunction.from_function(lambda *x: sum(ci * gi(*x) for ci, gi in zip(c, g)),
                                      dims, box)


def test_grid_invariants():
    with pytest.raises(InvalidParams):
        GridFunction((7, 8, 8), 1.0, np.zeros((7, 8, 8)))
    with pytest.raises(InvalidParams):
        GridFunction((8, 8, 8), 1.0, np.full((8, 8, 8), np.nan))
    f = GridFunction((8, 8, 8), 4.0, np.zeros((8, 8, 8)))
    assert not f.samples.flags.writeable
    k = f.frequencies()
    assert np.allclose(k * 4.0, np.round(k * 4.0))
    assert f.point_index((0.0, 0.0, 0.0)) == (4, 4, 4)


def test_zero_in_zero_out(table):
    f = GridFunction(DIMS, L, np.zeros(DIMS))
    assert np.all(apply_spectral(f, table).samples == 0)


def test_single_mode_diagonalized(table):
    k = np.array([2, -1, 3]) / L
    f = GridFunction.from_function(lambda x, y, z: np.exp(2j * math.pi * (k[0] * x + k[1] * y
                                                                            + k[2] * z)), DIMS, L)
    rf = apply_spectral(f, table)
    ref = m_total(P, M3, COS, Frequency.from_vector(k), -3, 3, 1e-11, "radial").value
    assert np.max(np.abs(rf.samples - ref * f.samples)) <= 1e-6 * abs(ref)


def test_plancherel_bound(table):
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = random_smooth(rng)
        assert lp_norm(apply_spectral(f, table), 2) <= table.max_abs * lp_norm(f, 2) * (1 + 1e-12)


def test_gaussian_l2_norm_closed_form():
    f = GridFunction.from_function(ModulatedGaussian((0, 0, 0), (0, 0, 0)), (64, 64, 64), 16.0)
    assert lp_norm(f, 2) == pytest.approx(2 ** -0.75, rel=1e-6)


def test_parseval_and_sobolev_reduction():
    f = random_smooth(np.random.default_rng(4))
    hat = np.fft.fftn(f.samples)
    assert lp_norm(f, 2) ** 2 == pytest.approx(np.sum(np.abs(hat) ** 2) / hat.size
                                               * f.cell_volume, rel=1e-10)
    assert sobolev_norm(f, 0.0) == lp_norm(f, 2)
    assert sobolev_norm(f, 1.0) > sobolev_norm(f, 0.5) > lp_norm(f, 2)


def test_norm_homogeneity_and_translation(table):
    f = random_smooth(np.random.default_rng(5))
    for p in (1.0, 1.5, 2.0, 3.0):
        assert lp_norm(f.with_samples(-2.5j * f.samples), p) == pytest.approx(2.5 * lp_norm(f, p),
                                                                             rel=1e-12)
    shifted = f.with_samples(np.roll(f.samples, (3, -2, 5), axis=(0, 1, 2)))
    for p in (1.5, 3.0):
        a = lp_norm(apply_spectral(shifted, table), p)
        b = lp_norm(apply_spectral(f, table), p)
        assert a == pytest.approx(b, rel=1e-8)


def test_linearity(table):
    rng = np.random.default_rng(6)
    f, g = random_smooth(rng), random_smooth(rng)
    a, b = 1.5 - 2j, -0.5j
    lhs = apply_spectral(f.with_samples(a * f.samples + b * g.samples), table).samples
    rhs = a * apply_spectral(f, table).samples + b * apply_spectral(g, table).samples
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(rhs))


def test_adjoint_pairing(table):
    rng = np.random.default_rng(7)
    for _ in range(10):
        f, g = random_smooth(rng), random_smooth(rng)
        lhs = np.vdot(g.samples, apply_spectral(f, table).samples)
        rhs = np.vdot(adjoint_apply_spectral(g, table).samples, f.samples)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)
        rr = adjoint_apply_spectral(apply_spectral(f, table), table)
        q = np.vdot(f.samples, rr.samples)
        assert q.real >= 0 and abs(q.imag) <= 1e-10 * abs(q)
        assert lp_norm(adjoint_apply_spectral(g, table), 2) <= table.max_abs * lp_norm(g, 2) \
            * (1 + 1e-12)


def test_leakage_warning(table):
    k = 15 / L
    f = GridFunction.from_function(lambda x, y, z: np.exp(2j * math.pi * k * x) + 0 * y * z,
                                   DIMS, L)
    assert spectral_tail(f) > 0.5
    with pytest.warns(SpectralLeakage):
        apply_spectral(f, table)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_spectral(random_smooth(np.random.default_rng(8)), table)


def test_grid_mismatch(table):
    with pytest.raises(InvalidParams):
        apply_spectral(GridFunction((16, 16, 16), L, np.zeros((16, 16, 16))), table)


def test_table_file_round_trip(tmp_path, table):
    path = tmp_path / "t.oscm"
    save_table(path, table.values, DIMS, L, table.key)
    raw = path.read_bytes()
    assert raw[:4] == b"OSCM" and len(raw) == 4 + 4 + 4 + 12 + 8 + 32 + 8 * 32 ** 3
    values, dims, box, key = load_table(path, table.key)
    assert dims == DIMS and box == L and key == table.key
    assert np.max(np.abs(values - table.values)) <= 1e-6 * table.max_abs
    with pytest.raises(DegenerateData):
        load_table(path, "0" * 64)


def test_table_cache_reuse(tmp_path):
    dims = (8, 8, 8)
    a = build_multiplier_table(P, M3, COS, dims, 4.0, range(-2, 3), None, cache_dir=tmp_path)
    files = list(tmp_path.glob("*.oscm"))
    assert len(files) == 1 and files[0].stem == a.key
    b = build_multiplier_table(P, M3, COS, dims, 4.0, range(-2, 3), None, cache_dir=tmp_path)
    assert np.array_equal(b.values, a.values.astype(np.complex64).astype(complex))
    c = build_multiplier_table(P, M3, COS, dims, 4.0, range(-1, 3), None, cache_dir=tmp_path)
    assert c.key != a.key


def test_direct_annihilates_constants():
    vals = [abs(apply_direct(lambda *x: np.ones_like(x[0]), [(0.3, -0.2, 0.1)], P, M3, COS,
                             quad_density=q)[0]) for q in (16, 32)]
    assert max(vals) <= 1e-10


def test_direct_shift_equivariance_and_linearity():
    f = ModulatedGaussian((0.1, 0.0, -0.2), (0.2, 0.0, 0.1), 1.0)
    a = np.array([0.4, -0.3, 0.7])
    shifted = lambda x, y, z: f(x - a[0], y - a[1], z - a[2])
    x = np.array([0.5, 0.2, 1.0])
    lhs = apply_direct(shifted, [x], P, M3, COS)[0]
    rhs = apply_direct(f, [x - a], P, M3, COS)[0]
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)
    g = ModulatedGaussian((0.0, 0.5, 0.0), (0.0, 0.0, 0.0), 1.2)
    both = apply_direct(lambda *y: 2 * f(*y) - 1j * g(*y), [x], P, M3, COS)[0]
    parts = apply_direct(f, [x], P, M3, COS)[0] * 2 - 1j * apply_direct(g, [x], P, M3, COS)[0]
    assert abs(both - parts) <= 1e-10 * abs(both)


def test_lp_sweep_validation_and_plancherel(table):
    fam = [random_smooth(np.random.default_rng(9))]
    with pytest.raises(InvalidParams):
        lp_sweep(table, fam, [1.01])
    rows, best = lp_sweep(table, fam, [1.5, 2.0, 3.0])
    assert len(rows) == 3 and best[2.0] <= table.max_abs * (1 + 1e-12)


def test_l1_dyadic_check_runs():
    f = random_smooth(np.random.default_rng(10))
    rep = l1_dyadic_check(P, M3, COS, f, range(0, 4))
    assert set(rep["ratios"]) == {0, 1, 2, 3} and rep["pass"]


def test_sobolev_ladder_limits():
    s0 = P.s0(1.0)
    rep = sobolev_smoothing_check(P, 1.0, M3, COS, s=0.0, ladder=range(0, 3), n_nodes=4)
    assert rep["pass"] and rep["s0"] == pytest.approx(s0)
    with pytest.raises(InvalidParams):
        sobolev_smoothing_check(P, 1.0, M3, COS, s=s0 + 0.06)
    desc = sobolev_smoothing_check(P, 1.0, M3, COS, s=s0 + 0.04, ladder=range(0, 3), n_nodes=4)
    assert desc["pass"] is None


def test_smoke_variant_refines():
    out = smoke_crossvalidation(0.25, 1.0, M3, sizes=(16, 32))
    assert out[32] < out[16]
