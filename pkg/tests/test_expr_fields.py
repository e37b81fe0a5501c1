import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gagliardo.expr import BinOp, Call, ExprSyntaxError, Pow, Var, compile_expr, parse_expr
from gagliardo.fields import Bump, Constant, Coordinate, CutoffVn, DistPower, Indicator, WeightField, as_field
from gagliardo.geometry import dist_to_boundary

from conftest import square


def _eval(field, pts):
    pts = np.asarray(pts, dtype=float)
    return field(pts, dist_to_boundary(square(), pts))


def test_distance_power_parses_to_power_node():
    node = parse_expr("dist^0.5")
    assert node == Pow(Var("dist"), 0.5)
    assert isinstance(compile_expr("dist^0.5"), DistPower)


def test_product_with_cutoff():
    node = parse_expr("x*vn(8)")
    assert node == BinOp("*", Var("x"), Call("vn", (8.0,)))
    pts = np.array([[0.05, 0.5], [0.5, 0.5], [0.2, 0.5]])
    got = _eval(compile_expr("x*vn(8)"), pts)
    np.testing.assert_allclose(got, [0.05 * 1.0, 0.0, 0.2 * (2 - 8 * 0.2)])


@pytest.mark.parametrize("src, offset", [("x +* y", 3), ("(x", 2), ("x y", 2), ("", 0), ("bump(1,2)", 8),
                                         ("foo", 0), ("x^", 2)])
def test_syntax_error_offsets(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr(src)
    assert info.value.offset == offset
    assert info.value.expected


def test_offset_counts_utf8_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("é")
    assert info.value.offset == 0
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("x + é")
    assert info.value.offset == 4


def test_precedence_and_associativity():
    pts = np.array([[0.3, 0.7]])
    assert _eval(compile_expr("1 - x - y"), pts)[0] == pytest.approx(1 - 0.3 - 0.7)
    assert _eval(compile_expr("2 + x * 3"), pts)[0] == pytest.approx(2 + 0.9)
    assert _eval(compile_expr("-x^2"), pts)[0] == pytest.approx(-0.09)
    assert _eval(compile_expr("(1 + x)^2"), pts)[0] == pytest.approx(1.69)
    assert _eval(compile_expr("min(x, y) + max(x, y)"), pts)[0] == pytest.approx(1.0)


def test_catalog_names():
    pts = np.array([[0.25, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(_eval(compile_expr("indicator"), pts), [1, 1])
    np.testing.assert_allclose(_eval(compile_expr("dist"), pts), [0.25, 0.5])
    np.testing.assert_allclose(_eval(compile_expr("bump(0.5, 0.5, 0.3)"), pts),
                               _eval(Bump(0.5, 0.5, 0.3), pts))
    with pytest.raises(ValueError):
        compile_expr("vn(0)")
    with pytest.raises(ValueError):
        compile_expr("bump(0.5, 0.5, 0)")


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_arithmetic_matches_python(a, b, x, y):
    src = f"{a!r} * x - ({b!r}) * y + x * y"
    got = _eval(compile_expr(src), np.array([[x, y]]))[0]
    assert got == pytest.approx(a * x - b * y + x * y, rel=1e-12, abs=1e-12)


def test_bump_support_and_peak():
    b = Bump(0.5, 0.5, 0.3)
    vals = _eval(b, np.array([[0.5, 0.5], [0.5, 0.81], [0.9, 0.9]]))
    assert vals[0] == pytest.approx(1.0) and vals[1] == 0.0 and vals[2] == 0.0


def test_cutoff_bounds_and_indicator():
    d = np.linspace(0, 1, 101)
    v = CutoffVn(4)(np.zeros((101, 2)), d)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[d <= 0.25] == 1) and np.all(v[d > 0.5] == 0)
    assert Indicator().is_constant and Constant(2.0).is_constant and not Coordinate(0).is_constant


def test_field_algebra_and_weights():
    pts = np.array([[0.2, 0.6]])
    f = (Coordinate(0) + 1.0) * 2.0 - Coordinate(1)
    assert _eval(f, pts)[0] == pytest.approx(2.4 - 0.6)
    assert _eval(as_field(3), pts)[0] == 3.0
    w = WeightField.distance_power(-0.5)
    assert w.kind == "distance-power"
    assert w(pts, np.array([0.2]))[0] == pytest.approx(0.2**-0.5)
    g = WeightField.general(Coordinate(0))
    assert g.kind == "general" and g(pts, np.array([0.2]))[0] == pytest.approx(0.2)
    assert math.isfinite(_eval(DistPower(0.7), pts)[0])
