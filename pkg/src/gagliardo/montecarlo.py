"""Importance-sampled Monte Carlo for weighted Gagliardo double integrals.

This path shares nothing with the Whitney quadrature beyond the domain's
distance and membership queries, so it serves as an independent check.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma as gamma_fn

from .estimate import Estimate
from .fields import WeightField, as_field
from .geometry import Domain, contains, dist_to_boundary

#: half-width of the excluded diagonal band, relative to the domain diameter
BAND = 1e-4


def _abs_cos_moment(p: float) -> float:
    """``int_0^{2 pi} |cos phi|^p dphi``."""
    return 2.0 * math.sqrt(math.pi) * gamma_fn((p + 1.0) / 2.0) / gamma_fn(p / 2.0 + 1.0)


def _stratified_bbox(domain: Domain, n: int, rng) -> np.ndarray:
    x0, y0, x1, y1 = domain.bounding_box
    k = max(1, int(math.sqrt(n)))
    u = (np.arange(k)[:, None] + rng.uniform(0, 1, (k, k))) / k
    v = (np.arange(k)[None, :] + rng.uniform(0, 1, (k, k))) / k
    pts = np.column_stack([x0 + (x1 - x0) * u.ravel(), y0 + (y1 - y0) * v.ravel()])
    return pts


def _gradient(f, domain, xy, d, h):
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    gx = (f(xy + ex, dist_to_boundary(domain, xy + ex)) - f(xy - ex, dist_to_boundary(domain, xy - ex))) / (2 * h)
    gy = (f(xy + ey, dist_to_boundary(domain, xy + ey)) - f(xy - ey, dist_to_boundary(domain, xy - ey))) / (2 * h)
    return np.hypot(gx, gy)


def mc_seminorm(f, domain: Domain, s: float, p: float, x_weight: WeightField, y_weight: WeightField,
                n_outer: int = 20000, n_inner: int = 64, seed: int = 0, theta: float | None = None,
                mix: float = 0.5) -> Estimate:
    """Monte Carlo estimate of ``(int int |f(x)-f(y)|^p |x-y|^(-2-sp) v(x) w(y))^(1/p)``.

    Outer points are jittered-grid samples of the bounding box.  Inner points
    come from a mixture of a uniform proposal on the bounding box and a
    radial proposal around ``x`` with radial density proportional to
    ``r^((1-s)p - 1)``, which cancels the diagonal singularity of the
    integrand.  ``theta`` restricts ``y`` to ``B(x, theta d(x))`` and then
    only the radial proposal is used.  The band ``|x - y| < BAND * diam`` is
    replaced by its first-order Taylor value.
    """
    f = as_field(f)
    rng = np.random.default_rng(seed)
    sp = s * p
    c = p - sp
    x0, y0, x1, y1 = domain.bounding_box
    area_box = (x1 - x0) * (y1 - y0)
    rb = BAND * domain.diam
    xs = _stratified_bbox(domain, n_outer, rng)
    inside = contains(domain, xs)
    n_all = len(xs)
    xs = xs[inside]
    dx = dist_to_boundary(domain, xs)
    fx = f(xs, dx)
    vx = x_weight(xs, dx)
    wx = y_weight(xs, dx)
    R0 = math.hypot(x1 - x0, y1 - y0)
    g = np.zeros(len(xs))
    chunk = max(1, 400000 // n_inner)
    for a in range(0, len(xs), chunk):
        sl = slice(a, a + chunk)
        xa = xs[sl]
        m = len(xa)
        if theta is None:
            Rmax = np.full(m, R0)
            lam = mix
        else:
            Rmax = theta * dx[sl]
            lam = 0.0
        # radial samples: inverse CDF of r^(c-1) on [rb, Rmax]
        u = rng.uniform(0, 1, (m, n_inner))
        lo = rb**c
        hi = Rmax[:, None] ** c
        r = (lo + u * (hi - lo)) ** (1.0 / c)
        phi = rng.uniform(0, 2 * math.pi, (m, n_inner))
        yr = np.stack([xa[:, 0:1] + r * np.cos(phi), xa[:, 1:2] + r * np.sin(phi)], axis=-1)
        if lam > 0:
            yu = np.stack([rng.uniform(x0, x1, (m, n_inner)), rng.uniform(y0, y1, (m, n_inner))], axis=-1)
            pick = rng.uniform(0, 1, (m, n_inner)) < lam
            y = np.where(pick[..., None], yu, yr)
        else:
            y = yr
        yflat = y.reshape(-1, 2)
        z = yflat - np.repeat(xa, n_inner, axis=0)
        rr = np.hypot(z[:, 0], z[:, 1]).reshape(m, n_inner)
        # mixture density at y
        norm = (hi - lo) / c  # int_rb^Rmax r^(c-1) dr
        q_rad = np.where((rr >= rb) & (rr <= Rmax[:, None]), rr ** (c - 2.0) / (2 * math.pi * norm), 0.0)
        q = (1.0 - lam) * q_rad
        if lam > 0:
            in_box = (yflat[:, 0] >= x0) & (yflat[:, 0] <= x1) & (yflat[:, 1] >= y0) & (yflat[:, 1] <= y1)
            q = q + lam * in_box.reshape(m, n_inner) / area_box
        ok = (rr >= rb).ravel() & contains(domain, yflat)
        val = np.zeros(m * n_inner)
        if ok.any():
            yo = yflat[ok]
            dy = dist_to_boundary(domain, yo)
            fy = f(yo, dy)
            wy = y_weight(yo, dy)
            idx = np.repeat(np.arange(m), n_inner)[ok]
            diff = np.abs(fx[sl][idx] - fy)
            kern = (diff * diff if p == 2.0 else diff**p) * rr.ravel()[ok] ** (-2.0 - sp)
            val[ok] = kern * vx[sl][idx] * wy / q.ravel()[ok]
        g[sl] = val.reshape(m, n_inner).mean(axis=1)
    # first-order value of the excluded band around each x
    h = 1e-6 * domain.diam
    grad = _gradient(f, domain, xs, dx, h)
    band = grad**p * _abs_cos_moment(p) * rb**c / c * vx * wx
    band[dx <= rb] = 0.0
    g_full = np.zeros(n_all)
    g_full[inside] = g + band
    integral = area_box * g_full.mean()
    se = area_box * g_full.std(ddof=1) / math.sqrt(n_all)
    root = integral ** (1.0 / p) if integral > 0 else 0.0
    se_root = root * se / (p * integral) if integral > 0 else 0.0
    return Estimate(
        value=float(root),
        stderr=float(se_root),
        extra={"integral": float(integral), "integral_stderr": float(se), "band": float(area_box * band.sum() / n_all),
               "pairs": int(len(xs) * n_inner), "seed": int(seed)},
    )
