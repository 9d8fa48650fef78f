import inspect

import numpy as np
import pytest

from anisowalk import FitError, UnknownTestError
from anisowalk import verify
from anisowalk.engine.pool import make_rng
from anisowalk.env import make_environment
from anisowalk.timechange import clock_ensemble
from anisowalk.verify import (OPERATIONS, SUITES, LilDiagnostic, SuiteContext, abel_identity_check,
                              construction_equivalence_test, coupling_error_scan, determinism_check,
                              endpoint_distribution_test, exact_endpoint_law, inverse_law_test,
                              exponent_regression, horizontal_fraction_test, lil_diagnostics,
                              local_time_increment_scan, resolve_suite, run_suite, time_change_bounds_test,
                              total_variation, truncation_scan, two_sample_ks)
from anisowalk.walk import local_time_profile, simple_walk, walk_ensemble


# ====== Régression ======

def test_regression_examples():
    fit = exponent_regression([(10, 10), (100, 100), (1000, 1000)])
    assert fit.slope == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert exponent_regression([(4, 2), (16, 4), (64, 8)]).slope == pytest.approx(0.5)
    assert exponent_regression([(n, n ** 0.5) for n in (4, 16, 64, 256)]).slope == pytest.approx(0.5)


def test_regression_drops_zero_points():
    with pytest.raises(FitError):
        exponent_regression([(10, 0), (100, 10)])
    fit = exponent_regression([(10, 0), (100, 10), (1000, 100), (10_000, 1000)])
    assert len(fit.points) == 3


# ====== Identité de sommation ======

def test_abel_hand_example():
    lhs, rhs, diff = abel_identity_check({1: 2, 2: 1}, [0.5, 0.5], 2.0)
    assert lhs == pytest.approx(6.0)
    assert rhs == pytest.approx(6.0)
    assert diff < 1e-12


def test_abel_constant_beta():
    xi = np.array([3.0, 5.0, 1.0, 4.0])
    lhs, rhs, diff = abel_identity_check(xi, np.full(5, 0.25), 4.0)
    assert lhs == pytest.approx(4.0 * xi.sum())
    assert diff < 1e-12


def test_abel_random_profiles():
    rng = make_rng(2)
    for _ in range(200):
        walk = simple_walk(int(rng.integers(10, 3000)), rng)
        prof = local_time_profile(walk)
        betas = rng.uniform(0.05, 1.0, size=prof.positive_part().size + 1)
        lhs, rhs, diff = abel_identity_check(prof, betas, float(rng.uniform(1, 3)))
        assert diff <= 1e-12 * max(abs(lhs), 1.0)


def test_abel_profile_without_positive_levels():
    assert abel_identity_check({-1: 2, -2: 1}, [0.5, 0.5], 2.0) == (0.0, 0.0, 0.0)
    walk = np.array([0, -1, -2, -1])
    assert abel_identity_check(local_time_profile(walk), [0.5], 2.0) == (0.0, 0.0, 0.0)


def test_abel_rejects_nonpositive_beta():
    with pytest.raises(ValueError):
        abel_identity_check({1: 1}, [0.0], 1.0)


# ====== Équivalence ======

def test_exact_law_sums_to_one():
    for name in ("comb", "hphc"):
        law = exact_endpoint_law(make_environment(name), 6)
        assert sum(law.values()) == pytest.approx(1.0)
    assert exact_endpoint_law(make_environment("hphc"), 0) == {(0, 0): 1.0}


def test_exact_law_two_steps_hphc():
    law = exact_endpoint_law(make_environment("hphc"), 1)
    assert law == pytest.approx({(0, 1): 0.25, (0, -1): 0.25, (1, 0): 0.25, (-1, 0): 0.25})


def test_equivalence_small_scale():
    env = make_environment("hphc")
    res = construction_equivalence_test(env, 4, 200_000, 3, block_size=50_000)
    assert res["tv"] < 0.02
    assert construction_equivalence_test(env, 0, 1000, 3)["tv"] == 0.0
    with pytest.raises(ValueError):
        construction_equivalence_test(env, 9, 10, 3)


def test_distances():
    a = np.linspace(0, 1, 100)
    assert two_sample_ks(a, a) == 0.0
    assert total_variation({1: 0.5, 2: 0.5}, {1: 1.0}) == pytest.approx(0.5)


# ====== Lois limites ======

def test_horizontal_fraction_degenerate():
    env = make_environment({"kind": "uniform", "p": 0.25})
    rep = horizontal_fraction_test(env, 20_000, 200, 5, block_size=100)
    assert rep.reference.startswith("point mass")
    assert rep.passed


def test_bounds_test_passes():
    assert time_change_bounds_test(2.0, 1.0, 20, 1.0, 1e-3, 1)["pass"]


# ====== Exposants ======

def test_coupling_uniform_slope():
    env = make_environment({"kind": "uniform", "p": 0.25})
    fit, info = coupling_error_scan(env, [2 ** k for k in range(8, 14)], 100, 6, block_size=50)
    assert info["bound"] == pytest.approx(0.85)
    assert fit.slope < info["bound"]


def test_truncation_ratios_small():
    res = truncation_scan(make_environment("hphc"), [256, 1024, 4096], 100, 2, block_size=50)
    assert max(res["ratios"]) < 1.0
    assert res["trend_slope"] is not None and res["trend_slope"] < 0.0


def test_increment_scan_runs():
    fit, info = local_time_increment_scan([2 ** k for k in range(8, 13)], 20, 4, block_size=5)
    assert len(info["medians"]) == 5
    assert fit.slope < 0.5


# ====== LIL ======

def test_lil_walk_max_shapes():
    diags = lil_diagnostics("walk_max", None, 2 ** 16, 1, k_min=256)
    assert [d.name for d in diags] == ["walk_max_limsup", "walk_max_chung_liminf"]
    for d in diags:
        assert d.checkpoints[0] == 256 and d.checkpoints[-1] == 2 ** 16
        assert all(s > 0 for s in d.normalized_stats)
    limsup = diags[0].normalized_stats
    assert all(b >= a for a, b in zip(limsup, limsup[1:]))


def test_lil_needs_a_checkpoint():
    with pytest.raises(ValueError):
        lil_diagnostics("walk_max", None, 200, 1, k_min=256)


def test_lil_unknown_kind():
    with pytest.raises(UnknownTestError):
        lil_diagnostics("velocity", None, 2 ** 10, 1)


def test_lil_band():
    assert LilDiagnostic("x", [8], [1.0], 1.0).passed
    assert not LilDiagnostic("x", [8], [2.0], 1.0).passed


# ====== Registre ======

def test_registry_covers_every_operation():
    assert set(SUITES) == set(OPERATIONS)
    public = {name for name, obj in inspect.getmembers(verify, inspect.isfunction)
              if obj.__module__ == verify.__name__ and not name.startswith("_")
              and name.endswith(("_test", "_check", "_scan", "_diagnostics", "_regression"))}
    assert public <= set(OPERATIONS.values())


def test_resolve_suite():
    assert resolve_suite("all") == list(SUITES)
    assert resolve_suite("abel,bounds") == ["abel", "bounds"]
    with pytest.raises(UnknownTestError):
        resolve_suite("abel,nope")


def test_abel_suite_passes():
    report = run_suite("abel", SuiteContext({"profiles": 50, "max_len": 500}, master_seed=1))
    assert report["test"] == "abel"
    assert report["pass"]


def test_truncation_suite_gates_on_trend():
    params = {"N_grid": [256, 1024, 4096], "replicas": 100, "block_size": 50}
    assert run_suite("truncation", SuiteContext(dict(params), master_seed=1, block_size=50))["pass"]
    strict = dict(params, max_trend=-10.0)
    assert not run_suite("truncation", SuiteContext(strict, master_seed=1, block_size=50))["pass"]


def test_regression_suite_passes():
    assert run_suite("regression", SuiteContext({}, master_seed=1))["pass"]


@pytest.mark.slow
def test_acceptance_suites():
    for name in SUITES:
        assert run_suite(name, SuiteContext({}, master_seed=20240601, workers=8))["pass"], name


# ====== Lois terminales, loi inverse, déterminisme (échelle réduite) ======

def test_endpoint_one_sample_branch():
    env = make_environment({"kind": "uniform", "p": 0.25})
    rep = endpoint_distribution_test(env, 2000, 4000, seed=3, block_size=1000, threshold_one=0.05)
    assert rep.reference.startswith("normal(0, ")
    assert rep.n_samples == 4000
    assert rep.passed


def test_endpoint_two_sample_branch():
    env = make_environment("hphc")
    rep = endpoint_distribution_test(env, 10000, 4000, bm_replicas=4000, dt=1e-3, seed=5,
                                     block_size=1000, threshold_two=0.08)
    assert rep.reference.startswith("Y(1)")
    assert rep.passed


def test_two_sample_ks_symmetric_on_walk_and_clock():
    ens = walk_ensemble(make_environment("hphc"), 1000, 1000, 9, block_size=500)
    walk_sample = ens.c2() / np.sqrt(1000)
    _, y = clock_ensemble(2.0, 1.0, 1.0, 1e-3, 1000, 9, block_size=500)
    assert two_sample_ks(walk_sample, y) == two_sample_ks(y, walk_sample)
    assert two_sample_ks(walk_sample, walk_sample) == 0.0


def test_inverse_law_reduced_scale():
    res = inverse_law_test(2.0, 1.0, 1.0, 1e-4, 5000, 8, block_size=1000, threshold=0.045)
    assert res["n"] == 5000
    for value in res["integrals"].values():
        assert value == pytest.approx(1.0, abs=1e-6)
    assert res["pass"]


def test_determinism_across_workers():
    res = determinism_check(make_environment("hphc"), 500, 600, 600, 1e-3, 12, workers=(1, 3), block_size=100)
    assert res["workers"] == [1, 3]
    assert res["identical"]
    assert res["ks"][0] == res["ks"][1]
