import math

import numpy as np
import pytest

from anisowalk import DensitySingularityError, PointMassLawError
from anisowalk.engine.pool import make_rng
from anisowalk.timechange import (DensitySpec, WienerGrid, additive_functional, check_time_change_bounds,
                                  clock_ensemble, complement_cdf, complement_density, density_integral,
                                  density_table, inverse_cdf, inverse_density, inverse_time_change,
                                  oscillating_bm, sample_law, simulate_wiener)


def test_wiener_grid_shape_and_determinism():
    W = simulate_wiener(1.0, 1.0, 5)
    assert W.values.size == 2
    assert W.values[0] == 0.0
    np.testing.assert_array_equal(simulate_wiener(1.0, 0.01, 7).values, simulate_wiener(1.0, 0.01, 7).values)
    with pytest.raises(ValueError):
        simulate_wiener(1.0, 0.0, 1)


def test_additive_functional_nonnegative_path():
    W = WienerGrid(0.1, np.abs(np.linspace(0.0, 1.0, 11)))
    tc = additive_functional(W, 2.0, 1.0)
    np.testing.assert_allclose(tc.A_values, 2.0 * W.times)


def test_equal_gammas_linear():
    W = simulate_wiener(1.0, 0.001, 3)
    tc = additive_functional(W, 1.5, 1.5)
    np.testing.assert_allclose(tc.A_values, 1.5 * W.times)


def test_bounds_hold_on_many_paths():
    for seed in range(50):
        W = simulate_wiener(1.0, 1e-3, seed)
        assert check_time_change_bounds(additive_functional(W, 3.0, 1.0))["ok"]


def test_inverse_time_change():
    W = WienerGrid(0.5, np.zeros(5))
    tc = additive_functional(W, 2.0, 2.0)
    assert inverse_time_change(tc, 3.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        inverse_time_change(tc, 5.0)


def test_identity_time_change():
    W = simulate_wiener(2.0, 0.01, 12)
    times = np.array([0.3, 0.77, 1.5])
    np.testing.assert_allclose(oscillating_bm(W, 1.0, 1.0, times), np.interp(times, W.times, W.values))


def test_degenerate_variance():
    tinv, y = clock_ensemble(2.0, 2.0, 1.0, 1e-3, 20_000, 4, block_size=5000)
    np.testing.assert_allclose(tinv, 0.5, atol=1e-9)
    assert np.var(y) == pytest.approx(0.5, rel=0.05)


def test_inverse_density_value():
    spec = DensitySpec(1.0, 2.0, 1.0)
    expected = 1 / (math.pi * 0.75 * math.sqrt(0.125))
    assert inverse_density(spec, 0.75) == pytest.approx(expected, rel=1e-12)
    assert inverse_density(spec, 0.4) == 0.0
    with pytest.raises(DensitySingularityError):
        inverse_density(spec, 0.5)


def test_point_mass():
    spec = DensitySpec(1.0, 2.0, 2.0)
    with pytest.raises(PointMassLawError) as info:
        inverse_density(spec, 0.5)
    assert info.value.atom == 0.5
    assert inverse_cdf(spec, 0.49) == 0.0
    assert inverse_cdf(spec, 0.5) == 1.0


def test_complement_density_support():
    spec = DensitySpec(1.0, 2.0, 1.0, "complement")
    assert spec.support == (0.0, 0.5)
    assert complement_density(spec, 0.7) == 0.0
    assert complement_density(spec, 0.25) == pytest.approx(inverse_density(spec.with_variant("inverse"), 0.75))


@pytest.mark.parametrize("g1,g2,t", [(2.0, 1.0, 1.0), (5.0, 1.2, 2.5), (1.01, 1.0, 0.3)])
def test_integrals_and_cdf(g1, g2, t):
    for variant in ("inverse", "complement"):
        spec = DensitySpec(t, g1, g2, variant)
        assert density_integral(spec) == pytest.approx(1.0, abs=1e-6)
    spec = DensitySpec(t, g1, g2)
    lo, hi = spec.support
    assert inverse_cdf(spec, lo) == pytest.approx(0.0, abs=1e-12)
    assert inverse_cdf(spec, hi) == pytest.approx(1.0, abs=1e-12)
    v = np.linspace(lo, hi, 50)
    assert np.all(np.diff(inverse_cdf(spec, v)) >= 0)
    np.testing.assert_allclose(complement_cdf(spec, t - v[::-1]), 1 - inverse_cdf(spec, v)[::-1], atol=1e-6)


def test_cdf_matches_quadrature_midpoint():
    from scipy import integrate
    spec = DensitySpec(1.0, 3.0, 1.0)
    lo, hi = spec.support
    mid = (lo + hi) / 2
    value, _ = integrate.quad(lambda v: inverse_density(spec, v), lo, mid, limit=200)
    assert inverse_cdf(spec, mid) == pytest.approx(value, abs=1e-6)


def test_sampler_matches_cdf():
    from scipy import stats
    spec = DensitySpec(1.0, 2.0, 1.0)
    sample = sample_law(spec, 50_000, make_rng(1))
    assert stats.kstest(sample, lambda v: inverse_cdf(spec, v)).statistic < 0.01


def test_density_table():
    df = density_table(DensitySpec(1.0, 2.0, 1.0), 101)
    assert list(df.columns) == ["v", "pdf", "cdf"]
    assert df["v"].iloc[0] == 0.5 and df["v"].iloc[-1] == 1.0
    assert df["cdf"].iloc[-1] == pytest.approx(1.0, abs=1e-6)
    assert np.isinf(df["pdf"].iloc[0])


def test_clock_matches_closed_form():
    from scipy import stats
    spec = DensitySpec(1.0, 2.0, 1.0)
    tinv, _ = clock_ensemble(2.0, 1.0, 1.0, 1e-4, 10_000, 7, block_size=2500)
    assert stats.kstest(tinv, lambda v: inverse_cdf(spec, v)).statistic < 0.03


# ====== Inverse du changement de temps : propriétés ======

def test_inverse_time_change_between_linear_clocks():
    for seed in range(20):
        W = simulate_wiener(1.0, 1e-3, seed)
        tc = additive_functional(W, 3.0, 1.0)
        s = np.linspace(0.0, tc.A_values[-1], 200)
        u = inverse_time_change(tc, s)
        assert np.all(u >= s / 3.0 - 1e-12)
        assert np.all(u <= s + 1e-12)
        assert np.all(np.diff(u) >= 0.0)


def test_inverse_time_change_increments_are_one_lipschitz():
    W = simulate_wiener(1.0, 1e-3, 4)
    tc = additive_functional(W, 3.0, 1.0)
    top = tc.A_values[-1]
    s = np.linspace(0.0, 0.5 * top, 101)
    for v in (1e-3, 0.01, 0.1, 0.4 * top):
        step = inverse_time_change(tc, s + v) - inverse_time_change(tc, s)
        assert np.all(step <= v + 1e-12)
        assert np.all(step >= v / 3.0 - 1e-12)


def test_inverse_time_change_undoes_clock():
    W = simulate_wiener(1.0, 1e-3, 11)
    tc = additive_functional(W, 3.0, 1.0)
    s = np.linspace(0.0, tc.A_values[-1], 300)
    u = inverse_time_change(tc, s)
    np.testing.assert_allclose(np.interp(u, tc.times, tc.A_values), s, atol=1e-9)
    grid = np.minimum(tc.A_values, tc.A_values[-1])
    np.testing.assert_allclose(inverse_time_change(tc, grid), tc.times, atol=1e-9)
    with pytest.raises(ValueError):
        inverse_time_change(tc, tc.A_values[-1] * 1.01)
    with pytest.raises(ValueError):
        inverse_time_change(tc, -0.1)


def test_oscillating_bm_is_wiener_read_on_inverse_clock():
    for seed in range(10):
        W = simulate_wiener(1.0, 1e-3, seed)
        tc = additive_functional(W, 3.0, 1.0)
        s = np.linspace(0.0, tc.A_values[-1], 150)
        y = oscillating_bm(W, 3.0, 1.0, s)
        expected = np.interp(inverse_time_change(tc, s), W.times, W.values)
        np.testing.assert_array_equal(y, expected)
        np.testing.assert_array_equal(y >= 0.0, expected >= 0.0)
    assert oscillating_bm(W, 3.0, 1.0, 0.0) == 0.0
