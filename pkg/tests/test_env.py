import numpy as np
import pytest

from anisowalk import DegenerateEnvironmentError, InvalidEnvironmentError
from anisowalk.env import (Environment, Kind, cesaro_estimate, environment_from_json, environment_to_json,
                           level_set_density, make_environment, oriented, validate_environment)


def test_presets():
    hphc = make_environment("hphc")
    assert hphc.p(0) == 0.25
    assert hphc.p(7) == 0.25
    assert hphc.p(-1) == 0.5
    comb = make_environment({"kind": "comb"})
    assert comb.p(0) == 0.25
    assert comb.p(3) == 0.5


def test_level_set_matches_hphc():
    ls = make_environment({"kind": "level_set", "B": "nonnegative", "p_in": 0.25, "p_out": 0.5})
    np.testing.assert_array_equal(ls.window(-50, 50), make_environment("hphc").window(-50, 50))


def test_table_violation_reports_level():
    with pytest.raises(InvalidEnvironmentError) as info:
        make_environment({"kind": "table", "default": 0.5, "levels": {"0": 0.25, "3": 0.6}})
    assert info.value.level == 3


def test_all_half_is_degenerate():
    with pytest.raises(DegenerateEnvironmentError):
        make_environment({"kind": "uniform", "p": 0.5})


def test_unknown_kind():
    with pytest.raises(InvalidEnvironmentError):
        make_environment({"kind": "spiral"})


def test_validate_returns_verdict():
    assert validate_environment(make_environment("hphc"))
    verdict = validate_environment(Environment(Kind.UNIFORM, (0.5,)))
    assert not verdict
    assert verdict.level is None


def test_cesaro_uniform_exact():
    prof = cesaro_estimate(make_environment({"kind": "uniform", "p": 0.25}), 1024)
    assert prof.gamma1 == 2.0
    assert prof.gamma2 == 2.0
    assert prof.degenerate
    assert prof.tau is None
    np.testing.assert_array_equal(prof.residuals_pos, 0.0)


def test_cesaro_hphc_and_comb():
    prof = cesaro_estimate(make_environment("hphc"), 1024)
    assert (prof.gamma1, prof.gamma2) == (2.0, 1.0)
    assert not prof.swapped
    comb = cesaro_estimate(make_environment("comb"), 1024)
    assert comb.gamma1 == pytest.approx(1.0)
    assert comb.gamma2 == pytest.approx(1.0)


def test_cesaro_stable_when_doubling_levels():
    for spec in ({"kind": "uniform", "p": 0.25}, "hphc"):
        small = cesaro_estimate(make_environment(spec), 1024)
        large = cesaro_estimate(make_environment(spec), 2048)
        assert (small.gamma1, small.gamma2) == (large.gamma1, large.gamma2)
    small = cesaro_estimate(make_environment("comb"), 1024)
    large = cesaro_estimate(make_environment("comb"), 2048)
    assert small.gamma1 == pytest.approx(large.gamma1, rel=1e-3)
    assert small.gamma2 == pytest.approx(large.gamma2, rel=1e-3)


def test_cesaro_extrapolates_finite_perturbation():
    # moyennes 4 + 7/k (niveaux positifs) et 4 + 6/k (niveaux négatifs)
    env = make_environment({"kind": "table", "default": 0.25, "levels": {"1": 0.1, "2": 0.2, "-1": 0.1}})
    small = cesaro_estimate(env, 1024)
    large = cesaro_estimate(env, 2048)
    assert small.tau == pytest.approx(1.0, abs=0.05)
    assert small.raw_gamma1 > 2.0 and small.raw_gamma2 > 2.0
    assert small.gamma1 == pytest.approx(2.0, abs=1e-9)
    assert small.gamma2 == pytest.approx(2.0, abs=1e-9)
    bound = 10.0 * 1024 ** (-small.tau)
    assert abs(small.gamma1 - large.gamma1) <= bound
    assert abs(small.gamma2 - large.gamma2) <= bound


def test_cesaro_needs_16_levels():
    with pytest.raises(ValueError):
        cesaro_estimate(make_environment("hphc"), 8)


def test_swapped_orientation():
    env = make_environment({"kind": "level_set", "B": "negative", "p_in": 0.25, "p_out": 0.5})
    env_o, prof = oriented(env)
    assert prof.swapped
    assert (prof.gamma1, prof.gamma2) == (2.0, 1.0)
    assert env_o.p(3) == 0.25
    assert env_o.p(-3) == 0.5


def test_periodic_converges_with_bounds():
    env = make_environment({"kind": "periodic", "values": [0.25, 0.5]})
    prof = cesaro_estimate(env, 1024)
    assert 1.0 <= prof.gamma2 <= prof.gamma1 <= 2.0
    assert prof.gamma1 == pytest.approx(1.5, abs=1e-3)


def test_json_round_trip_and_density():
    spec = {"kind": "table", "default": 0.5, "levels": {"0": 0.25, "-3": 0.1}}
    env = environment_from_json(spec)
    assert environment_to_json(env) == {"kind": "table", "default": 0.5,
                                        "levels": {"-3": 0.1, "0": 0.25}}
    assert level_set_density(env, 3) == pytest.approx(2 / 7)
