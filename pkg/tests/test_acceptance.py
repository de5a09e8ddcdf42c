"""Desk-scale acceptance runs, one test per criterion.

Each test prints a single ``CRITERION k: PASS|FAIL`` line with the measured
values next to the thresholds, then asserts. Thresholds are restated here
rather than read from the presets, so a preset drifting would show up.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from nonsensecorr import ising, theory
from nonsensecorr.config import parse_document
from nonsensecorr.graphs import CompleteBipartite, CurieWeiss, Lattice, build_interaction
from nonsensecorr.ising import IsingModel, SamplerPlan
from nonsensecorr.montecarlo import monotonicity_sweep, run_experiment
from nonsensecorr.presets import preset_document

TESTS = Path(__file__).parent


def announce(capsys, k: int, ok: bool, detail: str, seconds: float):
    with capsys.disabled():
        print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'}  [{seconds:.1f}s]  {detail}")


def preset_reports(name: str, **overrides):
    return [run_experiment(job.config) for job in parse_document(preset_document(name, **overrides))]


def rel_err(emp: float, target: float) -> float:
    return abs(emp - target) / target


# 1 -------------------------------------------------------------------------

def oracle_cases():
    for n in (4, 6):
        for beta in (0.5, 1.5):
            yield "exact_cw", CurieWeiss(n), beta, SamplerPlan("exact_cw")
            yield "glauber", CurieWeiss(n), beta, SamplerPlan("glauber", burn_in=50, thin=5)
            yield "glauber", CompleteBipartite(n), beta, SamplerPlan("glauber", burn_in=50, thin=5)
            fam = Lattice(2, 2) if n == 4 else Lattice(6, 1)
            yield "wolff", fam, beta, SamplerPlan("wolff", thin=1)


def test_criterion_1_oracle_equivalence(capsys):
    start = time.perf_counter()
    kept = 200_000
    worst, rows = 0.0, []
    for k, (method, fam, beta, plan) in enumerate(oracle_cases()):
        model = IsingModel(build_interaction(fam), beta)
        samples = ising.sample_stream(model, plan, kept, np.random.default_rng(100 + k))
        tv = ising.total_variation(ising.empirical_state_pmf(samples),
                                   ising.brute_force_pmf(model).probs)
        worst = max(worst, tv)
        rows.append(f"{method}/{type(fam).__name__}(n={fam.n})/b={beta:g}: {tv:.4f}")
    secs = time.perf_counter() - start
    ok = worst < 0.02 and secs < 120
    announce(capsys, 1, ok, f"max TV {worst:.4f} < 0.02 over {len(rows)} cases, "
             f"{kept} kept samples each, runtime < 120s", secs)
    assert worst < 0.02, rows
    assert secs < 120


# 2 -------------------------------------------------------------------------

def test_criterion_2_curie_weiss(capsys):
    start = time.perf_counter()
    reports = preset_reports("T2", replicates=2000)
    pairs = [(0.5, 0.5), (1.5, 1.5), (2.0, 0.3)]
    ok, parts = True, []
    for rep, (b1, b2) in zip(reports, pairs):
        assert rep.config["n"] == 1000 and rep.config["replicates"] == 2000
        assert (rep.config["model_x"]["beta"], rep.config["model_y"]["beta"]) == (b1, b2)
        m1, m2 = ising.solve_magnetization(b1), ising.solve_magnetization(b2)
        target = (1 - m1**2) * (1 - m2**2)
        t, r = rep.stat("scaled_t"), rep.stat("scaled_rho")
        e_t, e_r = rel_err(t["empirical_var"], target), rel_err(r["empirical_var"], 1.0)
        good = e_t <= 0.25 and e_r <= 0.15 and t["ks_pvalue"] > 1e-3 and r["ks_pvalue"] > 1e-3
        ok &= good
        parts.append(f"({b1:g},{b2:g}): varT {t['empirical_var']:.4g} vs {target:.4g} "
                     f"[{e_t:.1%}<=25%], varRho {r['empirical_var']:.3f} [{e_r:.1%}<=15%], "
                     f"KS p {t['ks_pvalue']:.3g}/{r['ks_pvalue']:.3g} > 0.001")
    secs = time.perf_counter() - start
    ok &= secs < 180
    announce(capsys, 2, ok, "; ".join(parts), secs)
    assert ok


# 3 -------------------------------------------------------------------------

def test_criterion_3_lattice_monotonicity(capsys):
    start = time.perf_counter()
    (job,) = parse_document(preset_document("T1", replicates=500))
    assert job.sweep == (0.0, 0.4, 0.8, 1.2, 1.6)
    assert job.config.n == 64 * 64
    trend = monotonicity_sweep(job.sweep, job.config, job.beta_y)
    inflated = all(v > 1.1 for b, v in zip(trend.betas, trend.var_rho) if b >= 0.8)
    spearman_one = math.isclose(trend.spearman_rho, 1.0, abs_tol=1e-12)
    secs = time.perf_counter() - start
    ok = inflated and spearman_one and secs < 900
    sds = ", ".join(f"{s:.3f}" for s in trend.sd_rho)
    vs = ", ".join(f"{v:.2f}" for v in trend.var_rho)
    announce(capsys, 3, ok, f"var(sqrt(n) rho) = [{vs}] (> 1.1 for beta >= 0.8); "
             f"sd = [{sds}], Spearman {trend.spearman_rho:.3f} == 1.0", secs)
    assert ok


# 4 -------------------------------------------------------------------------

def test_criterion_4_dense_universality(capsys):
    start = time.perf_counter()
    reports = preset_reports("T3")
    m = ising.solve_magnetization(1.5)
    heuristic_target = (1 - m * m) ** 2
    ok, parts = True, []
    families = set()
    for rep in reports:
        cfg = rep.config
        assert cfg["n"] == 800 and cfg["replicates"] == 1000
        families.add(cfg["model_x"]["family"])
        beta = cfg["model_x"]["beta"]
        t = rep.stat("scaled_t")
        if beta == 0.5:
            r = rep.stat("scaled_rho")
            e_t, e_r = rel_err(t["empirical_var"], 1.0), rel_err(r["empirical_var"], 1.0)
            good = e_t <= 0.25 and e_r <= 0.15
            parts.append(f"{cfg['name']}: varT {t['empirical_var']:.3f} [{e_t:.1%}<=25%], "
                         f"varRho {r['empirical_var']:.3f} [{e_r:.1%}<=15%]")
        else:
            assert beta == 1.5
            e_t = rel_err(t["empirical_var"], heuristic_target)
            good = e_t <= 0.35 and rep.heuristic
            parts.append(f"{cfg['name']}: varT {t['empirical_var']:.4g} vs {heuristic_target:.4g} "
                         f"[{e_t:.1%}<=35%], heuristic={rep.heuristic}")
        ok &= good
    assert families == {"complete_bipartite", "random_regular"}
    secs = time.perf_counter() - start
    ok &= secs < 1200
    announce(capsys, 4, ok, "; ".join(parts), secs)
    assert ok


# 5 -------------------------------------------------------------------------

def test_criterion_5_bulk_gaussian(capsys):
    start = time.perf_counter()
    (rep,) = preset_reports("T4i", replicates=2000)
    assert rep.config["n"] == 1000
    assert rep.spectral["regime"] == "bulk"
    r = rep.stat("scaled_rho")
    e_r = rel_err(r["empirical_var"], 4.0)
    p = rep.stat("normalized_rho")["ks_pvalue"]
    secs = time.perf_counter() - start
    ok = e_r <= 0.2 and p > 1e-3 and secs < 300
    announce(capsys, 5, ok, f"var(sqrt(n) rho) {r['empirical_var']:.3f} vs 4 [{e_r:.1%}<=20%]; "
             f"a_n {rep.spectral['a_n']:.4f}; KS(sqrt(n) rho a_n, N(0,1)) p {p:.3g} > 0.001", secs)
    assert ok


# 6 -------------------------------------------------------------------------

def test_criterion_6_spike(capsys):
    start = time.perf_counter()
    (rep,) = preset_reports("T4ii", replicates=1000)
    assert rep.config["n"] == 200 and rep.spectral["regime"] == "spike"
    raw = rep.stat("raw_rho")
    frac, mean = raw["fraction_abs_above_0.8"], raw["empirical_mean"]
    p = rep.stat("ab_statistic")["ks_pvalue"]
    secs = time.perf_counter() - start
    ok = frac >= 0.9 and abs(mean) <= 0.06 and p > 1e-3 and secs < 60
    announce(capsys, 6, ok, f"P(|rho|>0.8) {frac:.3f} >= 0.90; mean rho {mean:+.4f} within 0.06; "
             f"KS(n T/lambda1, AB) p {p:.3g} > 0.001", secs)
    assert ok


def test_criterion_6_ab_cdf_is_the_law():
    # guard the KS reference: quadrature CDF against the closed Bessel form
    from scipy.special import iti0k0
    t = np.linspace(-4, 4, 33)
    oracle = 0.5 + np.sign(t) * iti0k0(np.abs(t))[1] / np.pi
    np.testing.assert_allclose(theory.ab_cdf(t), oracle, atol=1e-9)


# 7 -------------------------------------------------------------------------

def test_criterion_7_equicorrelation(capsys):
    start = time.perf_counter()
    reports = preset_reports("C5", replicates=2000)
    ok, parts = True, []
    for rep, rho in zip(reports, (0.3, 0.7)):
        assert rep.config["model_x"]["rho"] == rho and rep.config["n"] == 1000
        t, r = rep.stat("scaled_t"), rep.stat("scaled_rho")
        target = (1 - rho) ** 2
        e_t, e_r = rel_err(t["empirical_var"], target), rel_err(r["empirical_var"], 1.0)
        ok &= e_t <= 0.2 and e_r <= 0.15
        parts.append(f"rho={rho:g}: varT {t['empirical_var']:.4f} vs {target:.2f} [{e_t:.1%}<=20%], "
                     f"varRho {r['empirical_var']:.3f} [{e_r:.1%}<=15%]")
    secs = time.perf_counter() - start
    ok &= secs < 180
    announce(capsys, 7, ok, "; ".join(parts), secs)
    assert ok


# 8 -------------------------------------------------------------------------

def test_criterion_8_ols(capsys):
    start = time.perf_counter()
    reports = preset_reports("T5", replicates=500)
    bands = {"a": lambda c: c < 0.93, "b": lambda c: c < 0.93, "c": lambda c: c > 0.95,
             "d": lambda c: c > 0.95, "e": lambda c: 0.93 <= c <= 0.97}
    observed = {"a": "below", "b": "below", "c": "above", "d": "above", "e": "nominal"}
    ok, parts = True, []
    for rep in reports:
        scen = rep.config["name"].split("-")[-1]
        assert rep.config["n"] == 200
        cov = rep.stat("ols")["coverage"]
        verdict = rep.ols_condition["verdict"]
        direction = {"anticonservative": "below", "valid": "above", "exact": "nominal"}[verdict]
        good = bands[scen](cov) and direction == observed[scen]
        ok &= good
        parts.append(f"({scen}) coverage {cov:.3f}, condition {verdict}")
    assert sorted(rep.config["name"].split("-")[-1] for rep in reports) == list("abcde")
    secs = time.perf_counter() - start
    ok &= secs < 120
    announce(capsys, 8, ok, "; ".join(parts) + "  [a,b < 0.93; c,d > 0.95; e in [0.93,0.97]]", secs)
    assert ok


# 9 -------------------------------------------------------------------------

INVARIANT_TESTS = [
    "test_stats.py::test_translation_invariance",
    "test_stats.py::test_bilinearity",
    "test_stats.py::test_correlation_bounded_and_symmetric",
    "test_stats.py::test_correlation_affine_invariance",
    "test_stats.py::test_centering_matrix_identity",
    "test_stats.py::test_ols_residual_orthogonality",
    "test_gaussian.py::test_a_n_at_most_one",
    "test_gaussian.py::test_a_n_equality_case",
    "test_gaussian.py::test_equicorrelation_tilde_closed_form",
    "test_gaussian.py::test_identity_tilde_is_centering_spectrum",
    "test_gaussian.py::test_basis_orthonormal_and_symmetric",
    "test_gaussian.py::test_sample_moments_n20",
    "test_gaussian.py::test_concentration_equal_eigenvalues",
    "test_gaussian.py::test_concentration_single_eigenvalue_flags",
    "test_gaussian.py::test_concentration_equicorrelation_spectrum",
    "test_graphs.py::test_symmetric_hollow_and_quadratic_form",
    "test_graphs.py::test_random_regular_simple_graph",
    "test_graphs.py::test_dense_regular_rows",
    "test_ising.py::test_spin_flip_symmetry_of_pmf",
    "test_ising.py::test_zero_field_mean_symmetry",
    "test_ising.py::test_determinism",
    "test_theory.py::test_curie_weiss_variance_monotone",
    "test_theory.py::test_ols_condition_monotone_pairs",
    "test_kstest.py::test_kolmogorov_sf_matches_scipy",
    "test_montecarlo.py::test_reproducible_across_threads",
    "test_montecarlo.py::test_reproducible_gaussian_threads",
    "test_montecarlo.py::test_type1_matches_prediction",
    "test_config_cli.py::test_simulate_outputs_and_echo_round_trip",
    "test_config_cli.py::test_outputs_stay_in_out_dir",
]


def test_criterion_9_invariant_suites(capsys):
    start = time.perf_counter()
    res = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                          *[str(TESTS / t) for t in INVARIANT_TESTS]],
                         capture_output=True, text=True, cwd=TESTS.parent)
    secs = time.perf_counter() - start
    summary = res.stdout.strip().splitlines()[-1] if res.stdout.strip() else res.stderr[-300:]
    ok = res.returncode == 0 and secs < 300
    announce(capsys, 9, ok, f"{len(INVARIANT_TESTS)} property suites: {summary}", secs)
    assert res.returncode == 0, res.stdout[-3000:]
    assert secs < 300
