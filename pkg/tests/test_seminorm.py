import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gagliardo.fields import Bump, Constant, Coordinate, DistPower, WeightField
from gagliardo.montecarlo import mc_seminorm
from gagliardo.seminorm import (HypothesisViolation, SpaceParams, comparability_ratio, full_seminorm, hardy_ratio,
                                lp_norm, pair_sums, truncated_seminorm)

from conftest import koch_decomposition, square, square_decomposition
from oracles import square_distance_zeta, square_distance_zeta_closed

BUMP = Bump(0.5, 0.5, 0.3)


def _mc(f, params, **kw):
    return mc_seminorm(f, square(), params.s, params.p, WeightField.distance_power(-params.alpha),
                       WeightField.distance_power(-params.beta), seed=11, **kw)


def _agree(a, b, se):
    return abs(a - b) <= max(0.05 * abs(b), 3.0 * se)


@pytest.mark.parametrize("bad", [dict(s=0.0, p=2), dict(s=1.0, p=2), dict(s=0.5, p=0.5), dict(s=0.5, p=math.inf),
                                 dict(s=0.5, p=2, alpha=-0.1), dict(s=0.5, p=2, theta=0.0),
                                 dict(s=0.5, p=2, theta=1.5)])
def test_space_params_validation(bad):
    with pytest.raises(ValueError):
        SpaceParams(**bad)


def test_space_params_derived():
    sp = SpaceParams(0.45, 2, 0.2, 0.2)
    assert sp.sp == pytest.approx(0.9)
    assert sp.total_exponent == pytest.approx(1.3)
    assert sp.replace(alpha=0.0).alpha == 0.0


def test_oracle_constants_agree():
    assert square_distance_zeta(0.5) == pytest.approx(square_distance_zeta_closed(0.5), rel=1e-10)
    assert square_distance_zeta_closed(0.5) == pytest.approx(3.7712, abs=5e-5)


def test_lp_norm_area():
    est = lp_norm(Constant(1.0), square(), 0.0, square_decomposition(10))
    assert est.value == pytest.approx(1.0, abs=1e-6)


def test_lp_norm_zeta_half():
    est = lp_norm(Constant(1.0), square(), 0.5, square_decomposition(10), p=1.0)
    assert est.value == pytest.approx(square_distance_zeta(0.5), rel=0.01)


def test_lp_norm_distance_integral():
    # int |d|^2 d^-1 = int d = 4 int_0^1/2 y (1 - 2y) dy = 1/6
    est = lp_norm(DistPower(1.0), square(), 1.0, square_decomposition(10), p=2.0)
    assert est.value == pytest.approx(1.0 / 6.0, rel=0.01)


def test_lp_norm_divergence_flag():
    est = lp_norm(Constant(1.0), square(), 1.5, square_decomposition(10))
    assert est.divergent and est.value == math.inf


@pytest.mark.parametrize("c", [0.0, 1.0, -3.5])
def test_constants_have_zero_seminorm(c):
    W = square_decomposition(7)
    params = SpaceParams(0.5, 2, 0.25, 0.25)
    assert full_seminorm(Constant(c), square(), params, W=W).value < 1e-10
    assert truncated_seminorm(Constant(c), square(), params, W=W).value < 1e-10


def test_coordinate_matches_monte_carlo():
    params = SpaceParams(0.5, 2.0)
    quad = full_seminorm(Coordinate(0), square(), params, W=square_decomposition(8))
    mc = _mc(Coordinate(0), params)
    assert _agree(quad.value, mc.value, math.hypot(mc.stderr, quad.stderr))


def test_bump_matches_monte_carlo():
    params = SpaceParams(0.3, 2.0, 0.25, 0.25)
    quad = full_seminorm(BUMP, square(), params, W=square_decomposition(8))
    mc = _mc(BUMP, params)
    assert _agree(quad.value, mc.value, math.hypot(mc.stderr, quad.stderr))


def test_truncated_theta_one_matches_restricted_monte_carlo():
    params = SpaceParams(0.5, 2.0, theta=1.0)
    quad = truncated_seminorm(Coordinate(0), square(), params, W=square_decomposition(8))
    mc = _mc(Coordinate(0), params, theta=1.0)
    assert abs(quad.value - mc.value) <= 0.05 * mc.value


def test_estimate_record():
    est = full_seminorm(Coordinate(0), square(), SpaceParams(0.5, 2), W=square_decomposition(7))
    assert est.depths == tuple(range(3, 8))
    assert len(est.refinement_trace) == 5
    assert est.refinement_trace == tuple(sorted(est.refinement_trace))
    assert est.value >= est.refinement_trace[-1]
    assert est.finite and not est.divergent
    d = est.to_dict()
    assert d["value"] == est.value and isinstance(d["refinement_trace"], list)


def test_symmetric_weight_is_twice_full_when_weights_equal():
    W = square_decomposition(7)
    params = SpaceParams(0.5, 2, 0.25, 0.25)
    a = full_seminorm(BUMP, square(), params, W=W)
    b = full_seminorm(BUMP, square(), params, W=W, symmetric=True)
    assert b.value**2 == pytest.approx(2 * a.value**2, rel=1e-12)


def test_decomposition_domain_mismatch():
    with pytest.raises(ValueError):
        full_seminorm(BUMP, square(), SpaceParams(0.5, 2), W=koch_decomposition(2, 5))
    with pytest.raises(ValueError):
        full_seminorm(BUMP, square(), SpaceParams(0.5, 2), W=None)


_CATALOG = [Coordinate(0), BUMP, DistPower(0.7), Coordinate(1)]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(_CATALOG), st.sampled_from([0.3, 0.5, 0.8]), st.sampled_from([1.0, 2.0, 3.0]),
       st.sampled_from([0.0, 0.25, 0.5]), st.sampled_from([0.0, 0.25, 0.5]), st.sampled_from([0.5, 1.0]))
def test_truncated_never_exceeds_full(f, s, p, alpha, beta, theta):
    W = square_decomposition(6)
    params = SpaceParams(s, p, alpha, beta, theta)
    sums = pair_sums(f, W, params)
    assert np.all(sums.truncated <= sums.full * (1 + 1e-12) + 1e-9)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(_CATALOG), st.floats(-3, 3), st.floats(0.1, 4))
def test_seminorm_affine_invariance(f, shift, scale):
    """``[a f + b] = |a| [f]``."""
    from gagliardo.fields import Scale, Sum

    W = square_decomposition(6)
    params = SpaceParams(0.5, 2)
    base = full_seminorm(f, square(), params, W=W, extrapolate_limit=False).value
    g = Sum(Scale(scale, f), Constant(shift))
    assert full_seminorm(g, square(), params, W=W, extrapolate_limit=False).value == pytest.approx(scale * base, rel=1e-9)


def test_comparability_sentinels_and_direction():
    W = square_decomposition(7)
    params = SpaceParams(0.5, 2, 0.25, 0.25)
    r = comparability_ratio(Constant(2.0), square(), params, W=W)
    assert math.isnan(r) and r.diagnostic == "both zero"
    r = comparability_ratio(Coordinate(0), square(), params, W=W)
    assert math.isfinite(r) and r >= 1


@pytest.mark.slow
def test_comparability_depth_stability():
    params = SpaceParams(0.5, 2, 0.25, 0.25)
    for f in (Coordinate(0), BUMP):
        r7 = comparability_ratio(f, square(), params, W=square_decomposition(7))
        r8 = comparability_ratio(f, square(), params, W=square_decomposition(8))
        assert abs(r8 / r7 - 1) < 0.10


def test_hardy_sentinel():
    r = hardy_ratio(Constant(0.0), square(), SpaceParams(0.3, 2, 0.1, 0.1), W=square_decomposition(7))
    assert math.isnan(r) and r.diagnostic == "both zero"


def test_hardy_bump_case_t_prime():
    r = hardy_ratio(BUMP, square(), SpaceParams(0.3, 2, 0.1, 0.1), xi=1, W=square_decomposition(8))
    assert math.isfinite(r) and r > 0


def test_hardy_distance_power_case_f_stable():
    params = SpaceParams(0.5, 2, 0.25, 0.25)
    u = DistPower(1.0)
    r6, r8 = (hardy_ratio(u, square(), params, W=square_decomposition(k)) for k in (6, 8))
    assert math.isfinite(r6) and math.isfinite(r8)
    assert abs(r8 / r6 - 1) <= 0.2


def test_hardy_infinite_left_side_raises():
    with pytest.raises(HypothesisViolation):
        hardy_ratio(Constant(1.0), square(), SpaceParams(0.5, 2, 0.25, 0.25), W=square_decomposition(9))
    with pytest.raises(ValueError):
        hardy_ratio(BUMP, square(), SpaceParams(0.5, 2), xi=2, W=square_decomposition(6))
