import numpy as np
import pytest
from sklearn.base import clone

from gagliardo.estimators import BoxCountingDimension, GagliardoSeminorm, WhitneyDecomposer
from gagliardo.fields import Bump, Constant, Coordinate, WeightField
from gagliardo.montecarlo import mc_seminorm
from gagliardo.seminorm import SpaceParams, comparability_ratio, full_seminorm, truncated_seminorm

from conftest import square, square_decomposition

UNWEIGHTED = WeightField.distance_power(0.0)


def test_whitney_decomposer_matches_function():
    est = WhitneyDecomposer(max_depth=6).fit(square())
    W = square_decomposition(6)
    assert est.n_cubes_ == len(W)
    np.testing.assert_array_equal(est.transform(), np.column_stack([W.level, W.ix, W.iy]))
    assert clone(est).get_params() == {"max_depth": 6}
    with pytest.raises(TypeError):
        WhitneyDecomposer().fit(np.zeros((3, 2)))


def test_box_counting_estimator():
    est = BoxCountingDimension(scales=list(np.geomspace(0.5, 0.005, 8))).fit(square())
    assert 0.95 <= est.dimension_ <= 1.05
    lo, hi = est.confidence_interval_
    assert lo <= est.dimension_ <= hi and est.fit_residual_ >= 0


def test_seminorm_estimator_matches_functions():
    est = GagliardoSeminorm(function="x", s=0.5, p=2.0, alpha=0.25, beta=0.25, depth=6).fit(square())
    params = SpaceParams(0.5, 2.0, 0.25, 0.25)
    W = square_decomposition(6)
    assert est.full_.value == pytest.approx(full_seminorm(Coordinate(0), square(), params, W=W).value, rel=1e-12)
    assert est.truncated_.value == pytest.approx(
        truncated_seminorm(Coordinate(0), square(), params, W=W).value, rel=1e-12)
    assert est.score(square()) == pytest.approx(comparability_ratio(Coordinate(0), square(), params, W=W), rel=1e-12)
    est.set_params(s=0.3)
    assert est.get_params()["s"] == 0.3


def test_monte_carlo_seed_determinism():
    a = mc_seminorm(Coordinate(0), square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=2000, n_inner=16, seed=3)
    b = mc_seminorm(Coordinate(0), square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=2000, n_inner=16, seed=3)
    c = mc_seminorm(Coordinate(0), square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=2000, n_inner=16, seed=4)
    assert a == b and a.value != c.value
    assert a.extra["seed"] == 3


def test_monte_carlo_constant_is_zero():
    est = mc_seminorm(Constant(1.5), square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=2000, n_inner=16)
    assert est.value == 0.0 and est.stderr == 0.0


def test_monte_carlo_error_shrinks_with_samples():
    f = Bump(0.5, 0.5, 0.3)
    small = mc_seminorm(f, square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=2500, n_inner=32, seed=1)
    large = mc_seminorm(f, square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=10000, n_inner=32, seed=1)
    assert 0.3 <= large.stderr / small.stderr <= 0.7
    assert abs(large.value - small.value) <= 4 * small.stderr


def test_monte_carlo_restriction_below_full():
    f = Coordinate(0)
    full = mc_seminorm(f, square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=4000, n_inner=32, seed=2)
    part = mc_seminorm(f, square(), 0.5, 2.0, UNWEIGHTED, UNWEIGHTED, n_outer=4000, n_inner=32, seed=2, theta=0.5)
    assert part.value < full.value
