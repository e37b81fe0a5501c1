import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gagliardo.series import extrapolate, growth_factors, increments, is_divergent, wynn_epsilon


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 5.0), st.floats(0.05, 0.9), st.floats(0.05, 0.95))
def test_shanks_exact_on_geometric_tails(limit, ratio, frac):
    # traces are positive partial integrals
    seq = [limit * (1 - frac * ratio**k) for k in range(7)]
    val, err = extrapolate(seq)
    assert val == pytest.approx(limit, rel=1e-8)
    # the indicator never exceeds the truncation error of the raw partial sum
    assert 0 <= err <= abs(limit - seq[-1]) * (1 + 1e-9) + 1e-12


def test_wynn_two_geometric_terms():
    seq = [3.0 - 0.5**k - 0.2 * 0.8**k for k in range(9)]
    cols = wynn_epsilon(seq)
    assert cols[2] == pytest.approx(3.0, rel=1e-10)


def test_extrapolate_degenerate_inputs():
    assert extrapolate([]) == (0.0, 0.0)
    assert extrapolate([2.0]) == (2.0, 2.0)
    assert extrapolate([1.0, 1.5]) == (1.5, 0.5)
    # growing increments: no acceleration
    assert extrapolate([1.0, 2.0, 4.0])[0] == 4.0
    # four points give a single unverifiable transform
    assert extrapolate([1.0, 1.5, 1.75, 1.875]) == (1.875, 0.125)


@pytest.mark.parametrize("trace, expected", [
    ([1, 2, 3, 4, 5], True),  # linear growth: increments constant
    ([1, 2, 4, 8, 16], True),
    ([1, 1.5, 1.75, 1.875, 1.9375], False),
    ([1, 2, 3], False),  # too short to decide
])
def test_increment_rule(trace, expected):
    assert is_divergent(trace) is expected


def test_growth_rule():
    assert is_divergent([1, 1.3, 1.7, 2.2], 1.2, 3, "growth")
    assert not is_divergent([1, 1.3, 1.5, 1.6], 1.2, 3, "growth")
    with pytest.raises(ValueError):
        is_divergent([1, 2, 3, 4, 5], mode="ratio")


def test_helpers():
    np.testing.assert_allclose(increments([1, 3, 6]), [2, 3])
    np.testing.assert_allclose(growth_factors([0, 1, 2, 3]), [2, 1.5])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 10.0), min_size=2, max_size=10))
def test_extrapolation_never_below_last_partial_sum(incs):
    trace = np.cumsum(incs)
    val, _ = extrapolate(trace)
    assert val >= trace[-1] - 1e-12 * trace[-1]
    assert math.isfinite(val)
