"""Reference quadrature rules on the unit square and for touching square pairs.

Touching pairs carry the hypersingular kernel ``|x - y|^(-2 - sp)``.  The
rule in :func:`near_rule` integrates over midpoint ``m = (x + y) / 2`` and
offset ``z = y - x`` (unit Jacobian).  The offset box is cut along the lines
where the midpoint rectangle changes shape and through the origin; cells
with a corner at the origin use polar coordinates with a Gauss-Jacobi rule
that absorbs ``t^((1 - s) p - 1)`` exactly.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple:
    """Nodes and weights on ``[0, 1]``."""
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def gauss_jacobi_t(n: int, c: float) -> tuple:
    """Nodes and weights on ``[0, 1]`` for the weight ``t^(c - 1)``, ``c > 0``."""
    x, w = roots_jacobi(n, 0.0, c - 1.0)
    return (x + 1.0) / 2.0, w / 2.0**c


@lru_cache(maxsize=None)
def square_rule(order: int, split: int = 1) -> tuple:
    """Tensor Gauss-Legendre rule on ``[0, 1]^2``, optionally composite over
    ``split x split`` sub-squares.  Returns ``(x, y, w)``."""
    t, w = gauss_legendre(order)
    base = (np.arange(split)[:, None] + t[None, :]).ravel() / split
    wb = np.tile(w, split) / split
    X, Y = np.meshgrid(base, base, indexing="ij")
    W = np.outer(wb, wb)
    return X.ravel(), Y.ravel(), W.ravel()


def _breaks(o: float, r: float) -> np.ndarray:
    pts = {o - 1.0, o, o + r - 1.0, o + r}
    lo, hi = o - 1.0, o + r
    if lo < 0.0 < hi:
        pts.add(0.0)
    return np.array(sorted(pts))


def _m_rule(z, o, r, n_m):
    """Midpoint interval ``[lo, hi]`` per axis, then ``n_m`` GL points."""
    lo = np.maximum(z / 2.0, o - z / 2.0)
    hi = np.minimum(1.0 + z / 2.0, o + r - z / 2.0)
    t, w = gauss_legendre(n_m)
    length = np.maximum(hi - lo, 0.0)
    return lo[..., None] + length[..., None] * t, length[..., None] * w


def _assemble(zx, zy, wz, o, r, n_m):
    mx, wmx = _m_rule(zx, o[0], r, n_m)
    my, wmy = _m_rule(zy, o[1], r, n_m)
    MX = np.repeat(mx[:, :, None], n_m, axis=2).reshape(len(zx), -1)
    MY = np.repeat(my[:, None, :], n_m, axis=1).reshape(len(zx), -1)
    WM = (wmx[:, :, None] * wmy[:, None, :]).reshape(len(zx), -1)
    k = n_m * n_m
    return (
        MX.ravel(),
        MY.ravel(),
        np.repeat(zx, k),
        np.repeat(zy, k),
        (WM * wz[:, None]).ravel(),
    )


def _polar_cell(x0, x1, y0, y1, sp, p, n_t, n_phi):
    """Offsets and weights for a cell with a corner at the origin.

    The weights include ``|z|^(-2 - sp) * |z|^p`` and the integrand is
    expected to be divided by nothing: callers multiply by ``F(z)`` and the
    weight carries ``|z|^-p`` through ``t^-p R^-sp`` (``R`` the ray length).
    """
    sx = x1 if abs(x1) > abs(x0) else x0
    sy = y1 if abs(y1) > abs(y0) else y0
    corners = [(sx, 0.0), (sx, sy), (0.0, sy)]
    tn, tw = gauss_jacobi_t(n_t, p - sp)
    pn, pw = gauss_legendre(n_phi)
    zs, ws = [], []
    for A, C in ((corners[0], corners[1]), (corners[1], corners[2])):
        a0 = math.atan2(A[1], A[0])
        a1 = math.atan2(C[1], C[0])
        if a1 - a0 > math.pi:
            a1 -= 2 * math.pi
        elif a0 - a1 > math.pi:
            a1 += 2 * math.pi
        span = a1 - a0
        phi = a0 + span * pn
        ex = C[0] - A[0]
        ey = C[1] - A[1]
        nx, ny = ey, -ex  # normal of the far edge
        num = nx * A[0] + ny * A[1]
        R = num / (nx * np.cos(phi) + ny * np.sin(phi))
        T, PHI = np.meshgrid(tn, np.arange(n_phi), indexing="ij")
        Rm = R[PHI]
        rho = T * Rm
        ang = phi[PHI]
        w = tw[:, None] * (abs(span) * pw)[None, :] * T ** (-p) * Rm ** (-sp)
        zs.append(np.column_stack([(rho * np.cos(ang)).ravel(), (rho * np.sin(ang)).ravel()]))
        ws.append(w.ravel())
    z = np.vstack(zs)
    return z[:, 0], z[:, 1], np.concatenate(ws)


def _tensor_cell(x0, x1, y0, y1, sp, n_z):
    t, w = gauss_legendre(n_z)
    # Grade toward the origin when the cell is close to it.
    size = max(x1 - x0, y1 - y0)
    gap = math.hypot(max(x0, -x1, 0.0), max(y0, -y1, 0.0))
    split = 1 if gap >= size else 2
    xs = (x0 + (x1 - x0) * (np.arange(split)[:, None] + t) / split).ravel()
    ys = (y0 + (y1 - y0) * (np.arange(split)[:, None] + t) / split).ravel()
    wx = np.tile(w, split) * (x1 - x0) / split
    wy = np.tile(w, split) * (y1 - y0) / split
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Wz = np.outer(wx, wy) * (X**2 + Y**2) ** (-(2.0 + sp) / 2.0)
    return X.ravel(), Y.ravel(), Wz.ravel()


@lru_cache(maxsize=256)
def near_rule(ox: float, oy: float, r: float, s: float, p: float, n_t: int = 4, n_phi: int = 4, n_z: int = 4, n_m: int = 2):
    """Rule for ``int_{[0,1]^2} int_{o + [0,r]^2} F(x, y) |x - y|^(-2-sp) dy dx``.

    Returns ``(mx, my, zx, zy, w)`` with ``x = m - z/2``, ``y = m + z/2``,
    so that the integral is approximated by ``sum(w * F(x, y))``.  The rule
    is exact in the radial variable for integrands behaving like
    ``|z|^p`` near the diagonal.
    """
    sp = s * p
    o = (ox, oy)
    bx = _breaks(ox, r)
    by = _breaks(oy, r)
    parts = []
    for x0, x1 in zip(bx[:-1], bx[1:]):
        for y0, y1 in zip(by[:-1], by[1:]):
            if x1 - x0 <= 0 or y1 - y0 <= 0:
                continue
            corner = (x0 == 0.0 or x1 == 0.0) and (y0 == 0.0 or y1 == 0.0)
            if corner:
                zx, zy, wz = _polar_cell(x0, x1, y0, y1, sp, p, n_t, n_phi)
            else:
                zx, zy, wz = _tensor_cell(x0, x1, y0, y1, sp, n_z)
            parts.append(_assemble(zx, zy, wz, o, r, n_m))
    out = tuple(np.concatenate([pt[k] for pt in parts]) for k in range(5))
    keep = out[4] > 0
    return tuple(np.ascontiguousarray(a[keep]) for a in out)
