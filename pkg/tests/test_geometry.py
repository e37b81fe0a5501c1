import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gagliardo.geometry import (BoundarySampler, GeometryError, Point, contains, dist_to_boundary, domain_from_json,
                                koch_snowflake, make_polygon, plumpness_estimate, tubular_volume)

from conftest import UNIT_SQUARE, koch, square
from oracles import brute_boundary_distance, strip_disk_area


def test_square_and_triangle_diameter():
    assert square().diam == pytest.approx(math.sqrt(2), rel=1e-12)
    assert make_polygon([(0, 0), (1, 0), (0, 1)]).diam == pytest.approx(math.sqrt(2), rel=1e-12)
    assert square().area == pytest.approx(1.0)


@pytest.mark.parametrize("verts", [
    [(0, 0), (1, 1), (1, 0), (0, 1)],  # bowtie
    [(0, 0), (1, 0)],
    [(0, 0), (0, 1), (1, 1), (1, 0)],  # clockwise
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (1, float("nan")), (0, 1)],
])
def test_invalid_polygons_rejected(verts):
    with pytest.raises(GeometryError):
        make_polygon(verts)


def test_point_rejects_non_finite():
    with pytest.raises(GeometryError):
        Point(float("inf"), 0.0)


@pytest.mark.parametrize("level, edges", [(0, 3), (1, 12), (2, 48), (5, 3072)])
def test_koch_edge_count_and_perimeter(level, edges):
    K = koch_snowflake(level)
    assert K.n_edges == edges
    assert K.perimeter == pytest.approx(3 * (4 / 3) ** level, rel=1e-12)
    assert K.kind == "koch-prefractal"


@pytest.mark.parametrize("level", range(6))
def test_koch_area(level):
    # each step adds 3 * 4^(k-1) triangles of area tri / 9^k
    tri = math.sqrt(3) / 4
    assert koch_snowflake(level).area == pytest.approx(tri * (1.6 - 0.6 * (4 / 9) ** level), rel=1e-12)


def test_koch_level_bounds():
    with pytest.raises(GeometryError):
        koch_snowflake(-1)
    with pytest.raises(GeometryError):
        koch_snowflake(9)


def test_distance_examples():
    sq = square()
    d = dist_to_boundary(sq, np.array([[0.5, 0.5], [0.0, 0.3]]))
    assert d[0] == pytest.approx(0.5, abs=1e-15)
    assert d[1] == 0.0


def test_distance_koch_matches_dense_sampling():
    K = koch(2)
    c = K.vertices.mean(axis=0)
    exact = float(dist_to_boundary(K, c[None, :])[0])
    brute = brute_boundary_distance(K.vertices, c)
    assert abs(exact - brute) <= 1e-6
    assert exact <= brute + 1e-15


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_square_distance_formula(x, y):
    d = dist_to_boundary(square(), np.array([[x, y]]))[0]
    assert d == pytest.approx(min(x, 1 - x, y, 1 - y), abs=1e-14)


def test_contains_examples():
    got = contains(square(), np.array([[0.5, 0.5], [2, 2], [1, 0.5]]))
    assert got.tolist() == [True, False, False]


def test_domain_json_roundtrip(tmp_path):
    K = koch(1)
    p = tmp_path / "k.json"
    import json

    p.write_text(json.dumps(K.to_json()))
    back = domain_from_json(p)
    assert back.kind == "koch-prefractal"
    np.testing.assert_array_equal(back.vertices, K.vertices)
    with pytest.raises(GeometryError):
        domain_from_json({"kind": "circle", "vertices": UNIT_SQUARE})


def test_boundary_sampler_on_square():
    E = BoundarySampler.from_domain(square())
    assert E.total_length == pytest.approx(4.0)
    pts = E.sample_uniform(400)
    assert np.max(E.distance(pts)) < 1e-12
    assert np.max(dist_to_boundary(square(), pts)) < 1e-12
    rng = np.random.default_rng(3)
    assert np.max(E.distance(E.sample_random(100, rng))) < 1e-12


def test_tubular_volume_strip_oracle():
    """A long straight segment makes the neighbourhood a two-sided strip."""
    E = BoundarySampler.from_segments(np.array([[-5.0, 0.0, 5.0, 0.0]]))
    r, R = 0.1, 0.5
    est = tubular_volume(E, (0.0, 0.0), r, R, mc_samples=20000, seed=1)
    exact = strip_disk_area(r, R)
    assert abs(est.value - exact) <= 3 * est.stderr
    assert est.stderr > 0


def test_tubular_volume_square_edge():
    E = BoundarySampler.from_domain(square())
    # at R = 0.4 the side edges stay outside the ball, so the strip oracle is exact
    r, R = 0.1, 0.4
    est = tubular_volume(E, (0.5, 0.0), r, R, mc_samples=20000, seed=2)
    exact = strip_disk_area(r, R)
    assert abs(est.value - exact) <= 3 * est.stderr
    inner = tubular_volume(E, (0.5, 0.0), r, R, mc_samples=20000, seed=2, inside=square())
    assert abs(inner.value - exact / 2) <= 3 * inner.stderr


def test_inner_tubular_volume_square_edge_exact_region():
    """At R = 0.5 the side edges enter the ball; compare with the exact region
    (square minus its inner parallel square) intersected with the disk."""
    from shapely import Point as SPoint, box

    E = BoundarySampler.from_domain(square())
    r, R = 0.1, 0.5
    est = tubular_volume(E, (0.5, 0.0), r, R, mc_samples=20000, seed=2, inside=square())
    region = box(0, 0, 1, 1).difference(box(r, r, 1 - r, 1 - r)).intersection(SPoint(0.5, 0.0).buffer(R, 4096))
    assert abs(est.value - region.area) <= 3 * est.stderr
    # first-order term of the example
    assert abs(est.value - r * 2 * R) <= 0.25 * r * 2 * R


def test_inner_tubular_volume_bounded_by_half_disk():
    E = BoundarySampler.from_domain(square())
    R = 0.3
    est = tubular_volume(E, (0.5, 0.0), R * 0.999, R, mc_samples=20000, seed=4, inside=square())
    assert est.value <= math.pi * R * R / 2 + 3 * est.stderr


def test_tubular_volume_deterministic_and_validated():
    E = BoundarySampler.from_domain(square())
    a = tubular_volume(E, (0.5, 0.0), 0.1, 0.4, mc_samples=5000, seed=7)
    b = tubular_volume(E, (0.5, 0.0), 0.1, 0.4, mc_samples=5000, seed=7)
    assert a == b
    with pytest.raises(GeometryError):
        tubular_volume(E, (0.5, 0.0), 0.4, 0.4)


def test_plumpness():
    assert plumpness_estimate(square(), [0.5]) >= 0.4
    ngon = [(math.cos(2 * math.pi * k / 64), math.sin(2 * math.pi * k / 64)) for k in range(64)]
    assert plumpness_estimate(make_polygon(ngon), [0.05]) >= 0.9


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 1.0), st.floats(0, 2 * math.pi)), min_size=3, max_size=8, unique_by=lambda t: t[1]))
def test_plumpness_in_unit_interval_for_convex(polar):
    from shapely import MultiPoint
    from shapely.geometry.polygon import orient

    pts = [(r * math.cos(a), r * math.sin(a)) for r, a in polar]
    hull = MultiPoint(pts).convex_hull
    if hull.geom_type != "Polygon" or hull.area < 1e-3:
        return
    coords = list(orient(hull, 1.0).exterior.coords)[:-1]
    dom = make_polygon(coords)
    kappa = plumpness_estimate(dom, [0.2 * dom.diam], trial_centers=10)
    assert 0 < kappa <= 1
