import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gagliardo.dimension import (assouad_codim_bounds, box_counting_dim, distance_zeta, homogeneity_constant,
                                 maximal_function, muckenhoupt_a1_constant)
from gagliardo.fields import Constant, DistPower, FunctionField
from gagliardo.geometry import BoundarySampler, GeometryError

from conftest import koch, square, square_decomposition
from oracles import square_distance_zeta_closed

LOG3_4 = math.log(4) / math.log(3)


def _scales(E, decades=2.0, n=10):
    return np.geomspace(0.4 * E.diam, 0.4 * E.diam * 10**-decades, n)


def test_zeta_area_and_half():
    W = square_decomposition(10)
    z0 = distance_zeta(W, 0.0)
    assert z0.value == pytest.approx(1.0, abs=1e-6)
    z = distance_zeta(W, 0.5)
    assert not z.divergent
    assert z.value == pytest.approx(square_distance_zeta_closed(0.5), rel=0.01)


def test_zeta_partial_values_nondecreasing():
    W = square_decomposition(9)
    for q in (0.0, 0.5, 1.0, 1.2, 1.8):
        pv = np.array(distance_zeta(W, q).partial_values)
        assert np.all(np.diff(pv) >= 0)


def test_zeta_divergence_dichotomy():
    W = square_decomposition(10)
    z = distance_zeta(W, 1.2)
    assert z.divergent and z.value == math.inf
    assert z.growth_divergent and all(g >= 1.2 for g in z.growth_factors[-3:])
    assert not distance_zeta(W, 0.8).divergent


def test_zeta_rejects_q_at_dimension():
    with pytest.raises(ValueError):
        distance_zeta(square_decomposition(5), 2.0)


def test_zeta_polygon_area():
    from gagliardo.geometry import make_polygon
    from gagliardo.whitney import decompose

    L = make_polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    z = distance_zeta(decompose(L, 10), 0.0)
    assert z.value == pytest.approx(L.area, rel=0.005)


def test_box_counting_square_and_koch():
    sq = BoundarySampler.from_domain(square())
    assert 0.95 <= box_counting_dim(sq, _scales(sq)).value <= 1.05
    K = BoundarySampler.from_domain(koch(5))
    est = box_counting_dim(K, _scales(K))
    assert 1.21 <= est.value <= 1.31
    lo, hi = est.confidence_interval
    assert lo <= est.value <= hi
    assert list(est.scales_used) == sorted(est.scales_used, reverse=True)


def test_box_counting_segment_three_decades():
    E = BoundarySampler.from_segments(np.array([[0.0, 0.0, 1.0, 0.3]]))
    assert 0.95 <= box_counting_dim(E, _scales(E, 3.0, 12)).value <= 1.05


def test_box_counting_single_point():
    E = BoundarySampler.from_segments(np.array([[0.3, 0.4, 0.3, 0.4]]))
    assert abs(box_counting_dim(E, np.geomspace(1.0, 1e-3, 6)).value) <= 0.05


@pytest.mark.parametrize("scales", [[0.1, 0.05, 0.01], [0.1, 0.09, 0.08, 0.07], [10.0, 1.0, 0.1, 0.01]])
def test_box_counting_scale_preconditions(scales):
    with pytest.raises(ValueError):
        box_counting_dim(BoundarySampler.from_domain(square()), scales)


def test_assouad_bounds_square_and_koch():
    lo, hi = assouad_codim_bounds(BoundarySampler.from_domain(square()))
    assert 0.85 <= lo <= 1.15 and 0.85 <= hi <= 1.15
    lo, hi = assouad_codim_bounds(BoundarySampler.from_domain(koch(5)))
    target = 2 - LOG3_4
    assert abs(lo - target) <= 0.15 and abs(hi - target) <= 0.15


def test_assouad_rejects_degenerate_pair():
    with pytest.raises(GeometryError):
        assouad_codim_bounds(BoundarySampler.from_domain(square()), centers=4, ratio_grid=[(0.1, 0.1)])


def test_a1_constant_weight_is_one():
    assert muckenhoupt_a1_constant(square(), 0.0, [3, 5]) == pytest.approx([1.0, 1.0])


def test_a1_dichotomy():
    a = muckenhoupt_a1_constant(square(), 0.5, [4, 8])
    assert a[1] / a[0] <= 1.5
    b = muckenhoupt_a1_constant(square(), 1.5, [4, 8])
    assert b[1] / b[0] >= 2.0


def test_a1_nondecreasing_in_alpha():
    vals = [muckenhoupt_a1_constant(square(), a, [5])[0] for a in (0.0, 0.25, 0.5, 0.75, 1.2)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))


def test_maximal_function_bounds():
    depths = [3, 4, 5, 6]
    assert maximal_function(square(), Constant(1.0), (0.3, 0.6), depths) == pytest.approx(1.0)
    left = FunctionField(lambda xy, d: (xy[:, 0] < 0.5).astype(float), "left half")
    m = maximal_function(square(), left, (0.25, 0.5), depths)
    assert 0.5 <= m <= 1.0


@pytest.mark.parametrize("p", [(0.3, 0.6), (0.05, 0.5), (0.5, 0.5)])
def test_maximal_function_dominated_by_a1(p):
    depths = [3, 4, 5, 6]
    A = max(muckenhoupt_a1_constant(square(), 0.5, depths))
    w = min(p[0], 1 - p[0], p[1], 1 - p[1]) ** -0.5
    assert maximal_function(square(), DistPower(-0.5), p, depths) <= A * w


def test_homogeneity_segment_stable_under_sampling():
    E = BoundarySampler.from_segments(np.array([[-1.0, 0.0, 1.0, 0.0]]))
    L3 = homogeneity_constant(E, 1.0, samples=1000, seed=1)
    L4 = homogeneity_constant(E, 1.0, samples=10000, seed=1)
    assert L4 / L3 <= 1.5


def test_homogeneity_koch_stable_under_sampling():
    E = BoundarySampler.from_domain(koch(5))
    L3 = homogeneity_constant(E, LOG3_4, samples=500, seed=1)
    L4 = homogeneity_constant(E, LOG3_4, samples=2000, seed=1)
    assert L4 / L3 <= 1.5


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 1000))
def test_homogeneity_trivial_bound_at_full_dimension(seed):
    E = BoundarySampler.from_segments(np.array([[-1.0, 0.0, 1.0, 0.0]]))
    # V lies in B(x, 2 lambda r)
    L = homogeneity_constant(E, 2.0, samples=100, seed=seed, mc_samples=256)
    assert L <= math.pi * (1 + 1) ** 2


def test_homogeneity_sigma_range():
    with pytest.raises(ValueError):
        homogeneity_constant(BoundarySampler.from_domain(square()), 2.5)
