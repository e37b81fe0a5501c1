import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gagliardo.quadrature import gauss_jacobi_t, gauss_legendre, near_rule, square_rule


def _overlap(z, o, r):
    return max(0.0, min(1.0, o + r - z) - max(0.0, o - z))


def pair_kernel_oracle(ox, oy, r, sp, p):
    """``int_{[0,1]^2} int_{o+[0,r]^2} |x-y|^(p-2-sp)`` via polar coordinates in ``z = y - x``."""
    # offsets z live in the box [ox - 1, ox + r] x [oy - 1, oy + r]
    bx = (ox - 1.0, ox + r)
    by = (oy - 1.0, oy + r)

    def rmax(phi):
        c, s = math.cos(phi), math.sin(phi)
        tx = (bx[1] / c if c > 1e-15 else (bx[0] / c if c < -1e-15 else math.inf))
        ty = (by[1] / s if s > 1e-15 else (by[0] / s if s < -1e-15 else math.inf))
        return max(0.0, min(tx, ty))

    def f(rad, phi):
        if rad == 0.0:
            return 0.0
        zx, zy = rad * math.cos(phi), rad * math.sin(phi)
        return _overlap(zx, ox, r) * _overlap(zy, oy, r) * rad ** (p - 1 - sp)

    total = 0.0
    for q in range(4):
        lo, hi = q * math.pi / 2, (q + 1) * math.pi / 2
        val, _ = integrate.dblquad(f, lo, hi, 0.0, rmax, epsabs=1e-10, epsrel=1e-8)
        total += val
    return total


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_gauss_legendre_exact_for_polynomials(n):
    t, w = gauss_legendre(n)
    for k in range(2 * n):
        assert np.dot(w, t**k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


@pytest.mark.parametrize("c", [0.2, 0.5, 1.0, 1.7])
def test_gauss_jacobi_absorbs_power(c):
    t, w = gauss_jacobi_t(5, c)
    for k in range(6):
        assert np.dot(w, t**k) == pytest.approx(1.0 / (k + c), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 5), st.integers(0, 5))
def test_square_rule_tensor_exactness(order, split, a, b):
    x, y, w = square_rule(order, split)
    assert w.sum() == pytest.approx(1.0, rel=1e-13)
    if a < 2 * order and b < 2 * order:
        assert np.dot(w, x**a * y**b) == pytest.approx(1.0 / ((a + 1) * (b + 1)), rel=1e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("o, r", [((0.0, 0.0), 1.0), ((1.0, 0.0), 1.0), ((1.0, 1.0), 1.0), ((1.0, 0.5), 0.5),
                                  ((-0.5, 1.0), 0.5)])
@pytest.mark.parametrize("s, p", [(0.5, 2.0), (0.3, 1.0), (0.8, 2.0)])
def test_near_rule_matches_polar_oracle(o, r, s, p):
    mx, my, zx, zy, w = near_rule(o[0], o[1], r, s, p, 6, 6, 6, 3)
    got = float(np.sum(w * np.hypot(zx, zy) ** p))
    ref = pair_kernel_oracle(o[0], o[1], r, s * p, p)
    assert got == pytest.approx(ref, rel=2e-3)


def test_near_rule_nodes_lie_in_both_squares():
    mx, my, zx, zy, w = near_rule(1.0, 0.5, 0.5, 0.5, 2.0)
    x = np.column_stack([mx - zx / 2, my - zy / 2])
    y = np.column_stack([mx + zx / 2, my + zy / 2])
    eps = 1e-12
    assert np.all((x >= -eps) & (x <= 1 + eps))
    assert np.all((y[:, 0] >= 1 - eps) & (y[:, 0] <= 1.5 + eps) & (y[:, 1] >= 0.5 - eps) & (y[:, 1] <= 1 + eps))
    assert np.all(w > 0)
