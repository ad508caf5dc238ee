"""Command-line entry point: ``hypersingular <command> [options]``.

Exit codes: 0 pass, 1 usage or parse error, 2 inadmissible profile,
3 acceptance threshold failed, 4 quadrature budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bumps import PatchIndex, compute_epsilons, patch_ranges, patches_near
from .config import ConfigError, RunConfig, load_config
from .errors import (BudgetExceeded, DegenerateData, HypersingularError, InvalidParams,
                     SignViolation, DegenerateDerivative)
from .multiplier import (Frequency, decay_fit, m_l_detail, sobolev_envelope)
from .operator import (GridFunction, ModulatedGaussian, apply_direct, build_multiplier_table,
                       apply_spectral, content_hash, l1_dyadic_check, lp_norm, lp_sweep,
                       smoke_crossvalidation, sobolev_smoothing_check)
from .phase import (CaseTag, check_lemma_lower_bound, classify_patch, lambda_scale,
                    sample_configurations)
from .profiles import certify_admissibility

log = logging.getLogger("hypersingular")

EXIT_OK, EXIT_USAGE, EXIT_INADMISSIBLE, EXIT_FAIL, EXIT_BUDGET = 0, 1, 2, 3, 4


class Inadmissible(Exception):
    pass


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "value") and isinstance(obj, CaseTag):
        return obj.value
    return obj


class Run:
    """Shared state for one command: config, constants and output files."""

    def __init__(self, cfg: RunConfig, out: Path, command: str, threads: int):
        self.cfg = cfg
        self.out = out
        self.command = command
        self.threads = threads
        self.params = cfg.params()
        self.profile = cfg.profile()
        self.omega = cfg.kernel()
        self.config_hash = content_hash(cfg.data)
        c = cfg["certificate"]
        try:
            self.cert = certify_admissibility(self.profile, c["r_min"], c["r_max"],
                                              c["n_samples"])
        except SignViolation as exc:
            self.cert = exc.certificate
        except DegenerateDerivative as exc:
            raise Inadmissible(str(exc)) from None
        self.eps = None
        if self.cert.admissible:
            factor = cfg["epsilon_factor"]
            self.eps = compute_epsilons(self.cert.k2_hat, self.cert.k3_hat, self.params.beta,
                                        cfg["epsilon_safety"])
            if factor is not None:
                self.eps = self.eps.inflated(float(factor) / self.eps.safety)

    def require_admissible(self):
        if not self.cert.admissible:
            raise Inadmissible(f"profile {self.profile} is not admissible: "
                               f"sign_ok={self.cert.sign_ok}, k1_hat={self.cert.k1_hat}")

    def constants(self) -> dict:
        d = {"k1": self.cert.k1_hat, "k2": self.cert.k2_hat, "k3": self.cert.k3_hat}
        if self.eps is not None:
            d.update(epsilon=self.eps.epsilon, epsilon1=self.eps.epsilon1,
                     epsilon2=self.eps.epsilon2, epsilon_bound=self.eps.bound)
        return d

    def header(self) -> dict:
        return {"command": self.command, "config_hash": self.config_hash,
                "seed": self.cfg["seed"], "threads": self.threads,
                "params": self.params.to_dict(), "constants": self.constants(),
                "version": __version__}

    def write_csv(self, name: str, columns, rows):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_hash={self.config_hash}\n")
            consts = ";".join(f"{k}={v!r}" for k, v in self.constants().items())
            fh.write(f"# {consts}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                            for v in row])
        return path

    def write_json(self, name: str, payload: dict):
        self.out.mkdir(parents=True, exist_ok=True)
        body = dict(self.header())
        body.update(payload)
        path = self.out / name
        path.write_text(json.dumps(_clean(body), indent=2, sort_keys=True) + "\n")
        return path


def cmd_profile_check(run: Run, args) -> int:
    run.write_json("profile_check.json", {"certificate": run.cert.to_dict(),
                                          "profile": run.profile.to_dict()})
    c = run.cert
    run.write_csv("profile_check.csv", ["k1_hat", "k2_hat", "k3_hat", "r_min", "r_max",
                                        "n_samples", "sign_ok"],
                  [[c.k1_hat, c.k2_hat, c.k3_hat, c.r_range[0], c.r_range[1], c.n_samples,
                    int(c.sign_ok)]])
    return EXIT_OK if c.admissible else EXIT_INADMISSIBLE


def cmd_lemma_check(run: Run, args) -> int:
    run.require_admissible()
    sec = run.cfg["lemma"]
    n = sec["n_configs"] if args.n_configs is None else args.n_configs
    if not isinstance(n, int) or n <= 0:
        raise InvalidParams(f"n_configs must be a positive integer, got {n!r}")
    rng = np.random.default_rng(run.cfg["seed"])
    configs = sample_configurations(rng, n, run.params, run.profile, sec["xi_max"],
                                    sec["l_max"], sec["critical_fraction"])
    rows, patch_rows = [], []
    failures = trivial = 0
    r1, r2 = patch_ranges(run.eps)
    tags = [t.value for t in CaseTag]
    for xi, l in configs:
        rep = check_lemma_lower_bound(run.params, run.profile, xi, l, run.eps,
                                      tuple(sec["grid"]))
        failures += not rep.passed
        rows.append(list(xi.as_tuple()) + [l, rep.lam, rep.epsilon, rep.min_ratio,
                                           rep.worst_point[0], rep.worst_point[1],
                                           int(rep.passed)])
        k = sec["patches_per_config"]
        if k:
            js = [p for p in patches_near(run.eps, *rep.worst_point)]
            js += [PatchIndex(int(rng.integers(r1.start, r1.stop)),
                              int(rng.integers(r2.start, r2.stop))) for _ in range(k)]
            hist = dict.fromkeys(tags, 0)
            for j in js:
                try:
                    tag = classify_patch(run.params, run.profile, xi, l, j, run.eps,
                                         sec["n_check"], rep.lam)
                except HypersingularError:
                    continue
                hist[tag.value] += 1
            trivial += hist[CaseTag.TRIVIAL_BOUND.value]
            patch_rows.append(list(xi.as_tuple()) + [l] + [hist[t] for t in tags])
    run.write_csv("lemma_check.csv", ["xi1", "xi2", "xi_last", "l", "lambda", "epsilon",
                                      "min_ratio", "worst_r", "worst_theta", "pass"], rows)
    if patch_rows:
        run.write_csv("lemma_patches.csv", ["xi1", "xi2", "xi_last", "l"] + tags, patch_rows)
    ok = failures == 0 and trivial == 0
    run.write_json("lemma_check.json", {
        "n_configs": n, "failures": failures, "trivial_bound_patches": trivial,
        "min_ratio": min(r[6] for r in rows), "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _frequencies(rows):
    return [Frequency.from_vector(v) for v in rows]


def cmd_multiplier(run: Run, args) -> int:
    run.require_admissible()
    sec = run.cfg["multiplier"]
    tol = run.cfg["tol"]
    l0, l1 = sec["levels"]
    p = run.params
    c_triv = 4 * math.pi * run.omega.sup_bound * 2 ** (p.alpha + 1) * 1.5
    rows, totals, worst_triv, worst_zero, worst_cross = [], [], 0.0, 0.0, 0.0
    checked = 0
    for xi in _frequencies(sec["xis"]):
        total = 0j
        for l in range(l0, l1 + 1):
            v, panels = m_l_detail(p, run.profile, run.omega, xi, l, tol, sec["method"])
            lam = lambda_scale(p, run.profile, xi, l)
            rows.append(list(xi.as_tuple()) + [l, v.real, v.imag, abs(v), lam, tol, panels])
            total += v
            worst_triv = max(worst_triv, abs(v) / (c_triv * 2.0 ** (p.alpha * l)))
            if xi.norm == 0:
                worst_zero = max(worst_zero, abs(v) / (10 * tol))
            if (sec["polar_check"] and sec["method"] != "polar"
                    and lam <= sec["polar_check_budget"]):
                w, _ = m_l_detail(p, run.profile, run.omega, xi, l, tol, "polar")
                worst_cross = max(worst_cross, abs(w - v) / (100 * tol))
                checked += 1
        totals.append({"xi": list(xi.as_tuple()), "sum": [total.real, total.imag],
                       "abs": abs(total)})
    run.write_csv("multiplier.csv", ["xi1", "xi2", "xi_last", "l", "re_ml", "im_ml", "abs_ml",
                                     "lambda", "tol", "panels"], rows)
    ok = worst_triv <= 1 and worst_zero <= 1 and worst_cross <= 1
    run.write_json("multiplier.json", {
        "levels": [l0, l1], "totals": totals, "trivial_bound_ratio": worst_triv,
        "zero_frequency_ratio": worst_zero, "polar_radial_ratio": worst_cross,
        "polar_checked": checked, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_decay(run: Run, args) -> int:
    run.require_admissible()
    sec = run.cfg["decay"]
    rows, fits, ok = [], [], True
    for xi in _frequencies(sec["xis"]):
        for window in sec["windows"]:
            try:
                fit = decay_fit(run.params, run.profile, run.omega, xi, tuple(window),
                                run.cfg["tol"])
            except DegenerateData as exc:
                fits.append({"xi": list(xi.as_tuple()), "window": window, "error": str(exc)})
                ok = False
                continue
            ref = fit.log2_abs_ml[fit.l_values.index(fit.anchor)] - fit.predicted_slope * fit.anchor
            for l, lg in zip(fit.l_values, fit.log2_abs_ml):
                rows.append(list(xi.as_tuple()) + [window[0], window[1], l, 2.0 ** lg,
                                                   2.0 ** (lg - fit.predicted_slope * l - ref)])
            d = fit.to_dict()
            d.update(xi=list(xi.as_tuple()), window=window)
            fits.append(d)
            ok = ok and fit.max_ratio_excess <= sec["slack"]
    run.write_csv("decay.csv", ["xi1", "xi2", "xi_last", "l0", "l1", "l", "abs_ml",
                                "normalized_ratio"], rows)
    run.write_json("decay.json", {"fits": fits, "slack": sec["slack"], "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sobolev_envelope(run: Run, args) -> int:
    run.require_admissible()
    sec = run.cfg["envelope"]
    xs = []
    for d in sec["directions"]:
        d = np.asarray(d, dtype=float) / np.linalg.norm(d)
        xs += [Frequency(tuple(m * d[:2]), m * d[2]) for m in sec["magnitudes"]]
    k3 = run.cert.k3_hat
    rep = sobolev_envelope(run.params, k3, run.profile, run.omega, xs, run.cfg["tol"],
                           run.cfg["lambda_budget"], sec["slack"], *run.cfg["l_window"])
    rows = [s["xi"] + [s["group"], s["abs_m"], s["tail_bound_lambda"], s["l_min"], s["l_max"]]
            for s in rep.samples]
    run.write_csv("envelope.csv", ["xi1", "xi2", "xi_last", "group", "abs_m",
                                   "tail_bound_lambda", "l_min", "l_max"], rows)
    k0, k1 = sec["ladder"]
    lad = sobolev_smoothing_check(run.params, k3, run.profile, run.omega, sec["ladder_s"],
                                  range(k0, k1 + 1), width=sec["ladder_width"],
                                  n_nodes=sec["ladder_nodes"],
                                  lambda_budget=sec["ladder_budget"], slack=sec["slack"])
    run.write_csv("sobolev_ladder.csv", ["k", "carrier", "ratio"],
                  [[k, 2.0 ** k, r] for k, r in zip(lad["ladder"], lad["ratios"])])
    ok = rep.passed and lad["pass"] is not False
    run.write_json("sobolev_envelope.json", {"envelope": rep.to_dict(), "ladder": lad,
                                             "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_apply(run: Run, args) -> int:
    run.require_admissible()
    sec = run.cfg["apply"]
    g = run.cfg["grid"]
    levels = list(sec["levels"])
    gauss = ModulatedGaussian((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), sec["width"])
    f = GridFunction.from_function(gauss, g["dims"], g["box_length"])
    table = build_multiplier_table(run.params, run.profile, run.omega, g["dims"],
                                   g["box_length"], levels, None, run.cfg["cache_dir"])
    spec = apply_spectral(f, table)
    probes = [tuple(x) for x in sec["probes"]]
    direct = apply_direct(gauss, probes, run.params, run.profile, run.omega,
                          (sec["r_inner"], sec["r_outer"]), levels=levels,
                          period=g["box_length"])
    sv = np.array([spec.samples[spec.point_index(x)] for x in probes])
    scale = float(np.abs(direct).max())
    rel = np.abs(sv - direct) / scale
    rows = [list(x) + [a.real, a.imag, b.real, b.imag, abs(a - b), r]
            for x, a, b, r in zip(probes, sv, direct, rel)]
    run.write_csv("apply.csv", ["x1", "x2", "x3", "re_spectral", "im_spectral", "re_direct",
                                "im_direct", "abs_diff", "rel_diff"], rows)
    smoke = smoke_crossvalidation(run.params.alpha, run.params.beta, run.profile,
                                  tuple(sec["smoke_sizes"]), sec["smoke_box"], levels)
    sizes = sorted(smoke)
    run.write_csv("apply_smoke.csv", ["n", "disagreement"], [[n, smoke[n]] for n in sizes])
    decreasing = all(smoke[b] < smoke[a] for a, b in zip(sizes, sizes[1:]))
    ok = float(rel.max()) <= sec["threshold"] and decreasing
    run.write_json("apply.json", {"max_rel_diff": float(rel.max()), "scale": scale,
                                  "threshold": sec["threshold"], "smoke": smoke,
                                  "smoke_decreasing": decreasing, "levels": levels,
                                  "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def sweep_family(rng, n: int):
    """Seeded modulated Gaussians, narrow in frequency compared with a 64^3 / L=16 grid."""
    out = []
    for _ in range(n):
        width = float(rng.uniform(1.5, 2.5))
        center = tuple(float(v) for v in rng.uniform(-2.0, 2.0, 3))
        k = rng.normal(size=3)
        k *= rng.uniform(0.0, 0.4) / np.linalg.norm(k)
        out.append(ModulatedGaussian(center, tuple(float(v) for v in k), width))
    return out


def cmd_sweep(run: Run, args) -> int:
    sec = run.cfg["sweep"]
    p_list = [float(p) for p in sec["p_list"]]
    for p in p_list:
        if not 1.05 <= p <= 16:
            raise InvalidParams(f"p = {p} outside [1.05, 16]")
    run.require_admissible()
    g = run.cfg["grid"]
    rng = np.random.default_rng(run.cfg["seed"])
    family = [GridFunction.from_function(h, g["dims"], g["box_length"])
              for h in sweep_family(rng, sec["n_functions"])]
    l0, l1 = run.cfg["l_window"]
    table = build_multiplier_table(run.params, run.profile, run.omega, g["dims"],
                                   g["box_length"], range(l0, l1 + 1), sec["table_budget"],
                                   run.cfg["cache_dir"])
    rows, best = lp_sweep(table, family, p_list)
    plancherel = max(lp_norm(apply_spectral(f, table, False), 2) / (table.max_abs * lp_norm(f, 2))
                     for f in family)
    a, b = sec["l1_levels"]
    l1_rep = l1_dyadic_check(run.params, run.profile, run.omega, family[0], range(a, b + 1),
                             sec["slack"])
    run.write_csv("sweep.csv", ["function", "p", "norm_f", "norm_rf", "ratio"],
                  [[r.index, r.p, r.norm_f, r.norm_rf, r.ratio] for r in rows])
    run.write_csv("sweep_l1.csv", ["l", "normalized_ratio"],
                  [[l, v] for l, v in l1_rep["ratios"].items()])
    window_ok = True
    if 2.0 in best:
        window_ok = all(v <= sec["slack"] * best[2.0] for v in best.values())
    ok = plancherel <= 1 + 1e-12 and window_ok and l1_rep["pass"]
    run.write_json("sweep.json", {
        "max_ratio": {repr(p): v for p, v in best.items()}, "max_abs_m": table.max_abs,
        "plancherel_ratio": plancherel, "p_window": list(run.params.p_window),
        "lp_sobolev_region": run.params.lp_sobolev_region(run.cert.k3_hat),
        "l1": l1_rep, "table_key": table.key, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "profile-check": cmd_profile_check,
    "lemma-check": cmd_lemma_check,
    "multiplier": cmd_multiplier,
    "decay": cmd_decay,
    "sobolev-envelope": cmd_sobolev_envelope,
    "apply": cmd_apply,
    "sweep": cmd_sweep,
}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypersingular",
        description="Numerical checks for oscillatory hypersingular integrals along "
                    "radial hypersurfaces.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=_u64, help="override the configured seed")
    common.add_argument("--threads", type=_positive, default=1,
                        help="worker count (recorded; evaluation order is fixed)")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a config entry, dotted keys allowed; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "lemma-check":
            p.add_argument("--n-configs", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if not hasattr(args, "n_configs"):
        args.n_configs = None
    try:
        overrides = list(args.override)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = load_config(args.config, overrides)
        run = Run(cfg, args.out, args.command, args.threads)
        return COMMANDS[args.command](run, args)
    except Inadmissible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, InvalidParams, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
