"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""
import filecmp
import math

import numpy as np
import pytest

from hypersingular.bumps import chi, compute_epsilons, eta, kappa, patch_ranges, patches_near
from hypersingular.bumps import PatchIndex
from hypersingular.cli import main, sweep_family
from hypersingular.errors import DomainError
from hypersingular.kernel import KernelOmega
from hypersingular.multiplier import (cartesian_oracle, decay_fit, m_l, multiplier_values,
                                      sobolev_envelope)
from hypersingular.operator import (GridFunction, ModulatedGaussian, apply_direct,
                                    apply_spectral, build_multiplier_table, l1_dyadic_check,
                                    lp_norm, lp_sweep, smoke_crossvalidation,
                                    sobolev_smoothing_check)
from hypersingular.params import Frequency, OperatorParams
from hypersingular.phase import (CaseTag, check_lemma_lower_bound, classify_patch,
                                 sample_configurations)
from hypersingular.profiles import ExpSinh, Monomial, MonomialSaturating, certify_admissibility

P = OperatorParams(2, 0.25, 1.0)
M3 = Monomial(3.0)
COS = KernelOmega(((1, 1.0, 0.0),))
MIXED = KernelOmega(((1, 1.0, 0.5), (3, -0.3, 0.2)))
DECAY_XIS = [(1.0, 0.0, 0.0), (0.6, 0.8, 1e-5), (3.0, -1.0, 1e-5), (0.2, 0.1, 1e-6),
             (2.0, 2.0, 0.0)]


def certified_epsilons(profile=M3, beta=1.0):
    cert = certify_admissibility(profile, 1e-3, 1e3, 10_000)
    return compute_epsilons(cert.k2_hat, cert.k3_hat, beta, 0.5)


def test_c01_admissibility_exactness(criterion):
    with criterion(1, "admissibility exactness", 5) as st:
        worst = 0.0
        for g in (1.5, 2.0, 3.0, 5.0):
            c = certify_admissibility(Monomial(g), 1e-3, 1e3, 10_000)
            worst = max(worst, abs(c.k1_hat - (g - 1)), abs(c.k2_hat - (g - 1)),
                        abs(c.k3_hat - abs(g - 2)))
        others = [certify_admissibility(p, 1e-3, 1e3, 10_000)
                  for p in (ExpSinh(), MonomialSaturating(2.0, 1.0))]
        finite = all(c.admissible and math.isfinite(c.k2_hat) and math.isfinite(c.k3_hat)
                     for c in others)
        st["ok"] = worst <= 1e-10 and finite
        st["detail"] = f"max monomial deviation {worst:.1e}, other families finite={finite}"
    assert st["ok"], st["detail"]


def test_c02_partition_identities(criterion):
    with criterion(2, "partition identities", 5) as st:
        rng = np.random.default_rng(2)
        r = 10 ** rng.uniform(-3, 3, 1000)
        e_eta = np.max(np.abs(sum(eta(2.0 ** l * r) for l in range(-12, 13)) - 1))
        x = rng.uniform(-10, 10, 1000)
        e_kappa = np.max(np.abs(sum(kappa(x + 4 * z / 3) for z in range(-10, 11)) - 1))
        eps = certified_epsilons()
        rs = rng.uniform(0.5, 2.0, 1000)
        ts = rng.uniform(0.0, math.pi, 1000)
        e_chi = max(abs(sum(chi(j, eps, a, b) for j in patches_near(eps, a, b)) - 1)
                    for a, b in zip(rs, ts))
        worst = max(e_eta, e_kappa, e_chi)
        st["ok"] = worst <= 1e-10
        st["detail"] = f"eta {e_eta:.1e}, kappa {e_kappa:.1e}, chi {e_chi:.1e}"
    assert st["ok"], st["detail"]


def test_c03_lemma_lower_bound(criterion):
    with criterion(3, "lemma lower bound brute force", 60) as st:
        eps = certified_epsilons()
        configs = sample_configurations(np.random.default_rng(0), 200, P, M3, 1e6, 10)
        reps = [check_lemma_lower_bound(P, M3, xi, l, eps, (101, 101)) for xi, l in configs]
        fails = sum(not r.passed for r in reps)
        st["ok"] = fails == 0 and eps.epsilon == pytest.approx(0.5 / 160, rel=1e-12)
        st["detail"] = (f"{fails} of {len(reps)} configs fail, epsilon {eps.epsilon:.6g}, "
                        f"min ratio {min(r.min_ratio for r in reps):.3f}")
    assert st["ok"], st["detail"]


def test_c04_patch_classification_totality(criterion):
    with criterion(4, "patch classification totality", 120) as st:
        eps = certified_epsilons()
        rng = np.random.default_rng(4)
        configs = sample_configurations(rng, 100, P, M3, 1e6, 10)
        r1, r2 = patch_ranges(eps)
        counts = dict.fromkeys(CaseTag, 0)
        for xi, l in configs:
            rep = check_lemma_lower_bound(P, M3, xi, l, eps, (101, 101))
            js = patches_near(eps, *rep.worst_point)
            js += [PatchIndex(int(rng.integers(r1.start, r1.stop)),
                              int(rng.integers(r2.start, r2.stop))) for _ in range(40)]
            for j in js:
                try:
                    counts[classify_patch(P, M3, xi, l, j, eps, 9, rep.lam)] += 1
                except DomainError:
                    continue
        total = sum(counts.values())
        st["ok"] = counts[CaseTag.TRIVIAL_BOUND] == 0 and total > 0
        st["detail"] = ", ".join(f"{t.value} {n}" for t, n in counts.items()) + \
            f" over {total} patches"
    assert st["ok"], st["detail"]


def test_c05_zero_frequency(criterion):
    with criterion(5, "multiplier vanishing at zero frequency", 30) as st:
        tol = 1e-8
        zero = Frequency((0.0, 0.0), 0.0)
        worst = max(abs(m_l(P, M3, MIXED, zero, l, tol, "polar")) for l in range(-10, 11))
        st["ok"] = worst <= 10 * tol
        st["detail"] = f"max |m_l(0)| {worst:.1e} against {10 * tol:.0e}"
    assert st["ok"], st["detail"]


def test_c06_frame_independence(criterion):
    with criterion(6, "frame independence", 600) as st:
        worst = 0.0
        n = 0
        for i, rho in enumerate((0.5, 2.0, 5.0)):
            for j, ang in enumerate((0.0, 2 * math.pi / 3, 4 * math.pi / 3)):
                for k, z in enumerate((-0.5, 0.0, 0.5)):
                    l = (i + j + k) % 3 - 1
                    xi = Frequency((rho * math.cos(ang), rho * math.sin(ang)), z)
                    got = m_l(P, M3, MIXED, xi, l, 1e-9, "polar")
                    ref = cartesian_oracle(P, M3, MIXED, xi, l, 4096, 4096)
                    worst = max(worst, abs(got - ref) / abs(ref))
                    n += 1
        st["ok"] = n == 27 and worst <= 1e-4
        st["detail"] = f"max rel. err {worst:.1e} over {n} combinations"
    assert st["ok"], st["detail"]


def test_c07_dyadic_decay(criterion):
    with criterion(7, "dyadic decay", 600) as st:
        worst = {}
        for alpha in (0.25, 0.4):
            p = OperatorParams(2, alpha, 1.0)
            for v in DECAY_XIS:
                xi = Frequency.from_vector(v)
                for window in ((1, 10), (-10, -1)):
                    fit = decay_fit(p, M3, COS, xi, window, 1e-8)
                    key = (alpha, window[0] > 0)
                    worst[key] = max(worst.get(key, 0.0), fit.max_ratio_excess)
        st["ok"] = all(v <= 10 for v in worst.values())
        st["detail"] = "max normalized ratio " + ", ".join(
            f"alpha={a} {'l>0' if hi else 'l<0'}: {v:.2f}" for (a, hi), v in worst.items())
    assert st["ok"], st["detail"]


def test_c08_uniform_bound(criterion):
    with criterion(8, "uniform multiplier bound", 900) as st:
        g = np.linspace(-8, 8, 10)
        xis = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
        peaks = {}
        for tol in (1e-6, 1e-7):
            vals, info = multiplier_values(P, M3, COS, xis, tol=tol, lambda_budget=2e3)
            peaks[tol] = float(np.abs(vals).max())
        change = abs(peaks[1e-7] - peaks[1e-6]) / peaks[1e-7]
        st["ok"] = all(math.isfinite(v) for v in peaks.values()) and change <= 0.01
        st["detail"] = (f"max |m| {peaks[1e-6]:.6f} -> {peaks[1e-7]:.6f}, change {change:.1e}, "
                        f"max skipped-level bound {np.max(info['tail_bound_lambda']):.3f}")
    assert st["ok"], st["detail"]


def test_c09_sobolev_envelope(criterion):
    with criterion(9, "Sobolev envelope", 900) as st:
        dirs = [(1.0, 0.0, 0.0), (0.6, 0.8, 0.0), (0.3, 0.2, 0.93), (0.1, -0.25, 0.96)]
        xs = []
        for d in dirs:
            d = np.asarray(d) / np.linalg.norm(d)
            xs += [Frequency(tuple(m * d[:2]), m * d[2]) for m in (10.0, 100.0, 1e3, 1e4)]
        rep = sobolev_envelope(P, 1.0, M3, COS, xs, 1e-8, 1e4, 10.0)
        exps = rep.predicted_exponent
        st["ok"] = (rep.passed and exps["xi_prime"] == pytest.approx(-0.125)
                    and exps["xi_last"] == pytest.approx(-0.0625))
        st["detail"] = ", ".join(f"{k} max ratio {max(v):.2f}" for k, v in rep.ratios.items())
    assert st["ok"], st["detail"]


def test_c10_operator_crossvalidation(criterion):
    with criterion(10, "operator cross-validation", 1200) as st:
        dims, box, levels = (64, 64, 64), 16.0, [-1, 0, 1]
        gauss = ModulatedGaussian((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 1.0)
        f = GridFunction.from_function(gauss, dims, box)
        table = build_multiplier_table(P, M3, COS, dims, box, levels, None)
        rf = apply_spectral(f, table)
        probes = [(0.0, 0.0, 0.0), (0.5, 0.0, 1.0), (-1.0, 0.5, 2.0), (1.0, 1.0, -1.0),
                  (0.0, -1.5, 0.5), (2.0, 0.0, 3.0), (-0.5, -0.5, -0.5), (0.25, 0.75, 1.5)]
        direct = apply_direct(gauss, probes, P, M3, COS, (0.25, 4.0), levels=levels,
                              period=box)
        spec = np.array([rf.samples[rf.point_index(x)] for x in probes])
        rel = float(np.max(np.abs(spec - direct)) / np.max(np.abs(direct)))
        smoke = smoke_crossvalidation(0.25, 1.0, M3, (16, 32), 8.0, levels)
        st["ok"] = rel <= 5e-2 and smoke[32] < smoke[16]
        st["detail"] = (f"64^3 rel. disagreement {rel:.1e}; reduced variant "
                        f"{smoke[16]:.1e} -> {smoke[32]:.1e}")
    assert st["ok"], st["detail"]


def test_c11_l2_and_lp(criterion):
    with criterion(11, "L2 and Lp behaviour", 1200) as st:
        dims, box = (64, 64, 64), 16.0
        family = [GridFunction.from_function(h, dims, box)
                  for h in sweep_family(np.random.default_rng(11), 20)]
        table = build_multiplier_table(P, M3, COS, dims, box, range(-20, 21), 2e3)
        planch = max(lp_norm(apply_spectral(f, table), 2) / (table.max_abs * lp_norm(f, 2))
                     for f in family)
        _, best = lp_sweep(table, family, [1.5, 2.0, 3.0])
        window = max(best.values()) / best[2.0]
        l1 = l1_dyadic_check(P, M3, COS, family[0], range(0, 9), 10.0)
        l1_worst = max(l1["ratios"].values()) / l1["constant"]
        st["ok"] = planch <= 1 + 1e-12 and window <= 10 and l1["pass"]
        st["detail"] = (f"Plancherel ratio {planch:.3f}, max Lp ratio / L2 ratio {window:.3f}, "
                        f"L1 dyadic worst {l1_worst:.2f} x C")
    assert st["ok"], st["detail"]


def test_c12_sobolev_ladder(criterion):
    with criterion(12, "Sobolev smoothing ladder", 600) as st:
        rep = sobolev_smoothing_check(P, 1.0, M3, COS, s=1 / 16, ladder=range(0, 9))
        worst = max(rep["ratios"]) / rep["reference"]
        st["ok"] = bool(rep["pass"])
        st["detail"] = f"max ratio {worst:.2f} x the k = 0 value at s = {rep['s']:.4f}"
    assert st["ok"], st["detail"]


def test_c13_determinism(criterion, tmp_path):
    with criterion(13, "determinism", None) as st:
        commands = [["lemma-check", "--n-configs", "50", "--override",
                     "lemma.patches_per_config=5"],
                    ["multiplier", "--override", "multiplier.levels=[-2, 2]"],
                    ["decay"], ["profile-check"]]
        same, compared = True, 0
        for cmd in commands:
            outs = []
            for run in ("a", "b"):
                out = tmp_path / cmd[0] / run
                assert main(cmd + ["--out", str(out), "--seed", "7"]) == 0
                outs.append(out)
            names = sorted(p.name for p in outs[0].glob("*.csv"))
            match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
            compared += len(names)
            same = same and not mismatch and not errors and len(match) == len(names) > 0
        st["ok"] = same
        st["detail"] = f"{compared} CSV files compared across {len(commands)} commands"
    assert st["ok"], st["detail"]
