"""Boundary dimensions and weight-class constants.

All estimators are empirical: box counting, Monte Carlo tubular volumes,
Whitney-cube integrals and dyadic cell averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from scipy import stats

from . import _kernels
from .estimate import Estimate
from .fields import as_field
from .geometry import (BoundarySampler, Domain, GeometryError, Point, _ball_samples, contains, segments_near,
                       tubular_volume)
from .quadrature import square_rule
from .series import DIVERGENCE_RUN, INCREMENT_THRESHOLD, extrapolate, growth_factors, is_divergent
from .seminorm import cube_integrals, depth_trace
from .whitney import WhitneyDecomposition, decompose

#: ratio ``T_k / T_(k-1)`` used by the literal growth-factor divergence rule
GROWTH_THRESHOLD = 1.2


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    scales_used: tuple
    fit_residual: float
    confidence_interval: tuple
    counts: tuple = ()


@dataclass(frozen=True)
class ZetaResult:
    q: float
    partial_values: tuple
    divergent: bool
    value: float
    depths: tuple = ()
    error: float = 0.0
    growth_factors: tuple = ()
    growth_divergent: bool = False


def _fit(x, y, level: float = 0.95):
    """Least-squares slope with its residual norm and t-interval."""
    res = stats.linregress(x, y)
    n = len(x)
    resid = y - (res.intercept + res.slope * x)
    half = stats.t.ppf(0.5 + level / 2, n - 2) * res.stderr if n > 2 else math.inf
    return float(res.slope), float(res.intercept), float(np.sqrt(np.mean(resid**2))), half


# -- box counting ----------------------------------------------------------------

#: grid offsets, as fractions of the box side, averaged at every scale
_OFFSETS = np.random.default_rng(0).uniform(0.0, 1.0, (16, 2))


def box_counts(boundary: BoundarySampler, scales, oversample: int = 10) -> np.ndarray:
    """Occupied grid boxes at each scale, averaged over shifted grids."""
    scales = np.asarray(scales, dtype=float)
    h = scales.min() / oversample
    n = max(int(math.ceil(boundary.total_length / h)), 1)
    pts = np.vstack([boundary.sample_uniform(n), boundary.segments[:, :2]])
    lo = pts.min(axis=0)
    out = []
    for r in scales:
        counts = []
        for ox, oy in _OFFSETS:
            ix = np.floor((pts[:, 0] - lo[0]) / r + ox).astype(np.int64)
            iy = np.floor((pts[:, 1] - lo[1]) / r + oy).astype(np.int64)
            counts.append(len(np.unique(ix * (1 << 31) + iy)))
        out.append(np.mean(counts))
    return np.array(out)


def box_counting_dim(boundary: BoundarySampler, scales) -> DimensionEstimate:
    """Slope of ``log N(r)`` against ``log(1/r)``."""
    scales = np.sort(np.asarray(scales, dtype=float))[::-1]
    if len(scales) < 4:
        raise ValueError("box counting needs at least 4 scales")
    if np.any(scales <= 0) or len(np.unique(scales)) != len(scales):
        raise ValueError("scales must be distinct and positive")
    if scales[0] / scales[-1] < 100.0 * (1 - 1e-9):
        raise ValueError("scales must span at least two decades")
    diam = boundary.diam
    if diam > 0 and np.any(scales >= diam):
        raise ValueError("scales must be smaller than the diameter")
    counts = box_counts(boundary, scales)
    x = np.log(1.0 / scales)
    y = np.log(counts)
    slope, _, resid, half = _fit(x, y)
    return DimensionEstimate(slope, tuple(scales.tolist()), resid, (slope - half, slope + half), tuple(float(c) for c in counts))


# -- Assouad codimensions ----------------------------------------------------------

def tubular_fractions(boundary: BoundarySampler, centers, ratio_grid, mc_samples: int = 4000, seed: int = 0) -> np.ndarray:
    """``|E_r ∩ B(x, R)| / |B(x, R)|`` for every center (rows) and ``(r, R)`` pair (columns)."""
    out = np.empty((len(centers), len(ratio_grid)))
    for i, c in enumerate(centers):
        for j, (r, R) in enumerate(ratio_grid):
            est = tubular_volume(boundary, c, r, R, mc_samples, seed=seed + i * len(ratio_grid) + j)
            out[i, j] = est.value / (math.pi * R * R)
    return out


def assouad_codim_bounds(boundary: BoundarySampler, centers: int = 40, ratio_grid=None, mc_samples: int = 4000,
                         seed: int = 0, quantile: float = 0.9) -> tuple:
    """Empirical ``(lower, upper)`` Assouad codimensions of the boundary.

    Fits ``log v`` against ``log(r/R)`` for the upper and lower quantiles of
    the tubular fractions ``v`` over boundary centers.  The upper envelope
    bounds ``v <= C (r/R)^q`` and gives the lower codimension; the lower
    envelope gives the upper codimension.
    """
    diam = boundary.diam
    if ratio_grid is None:
        ratio_grid = [(R * t, R) for R in (0.1 * diam, 0.2 * diam, 0.4 * diam) for t in (0.02, 0.05, 0.1, 0.2)]
    ratio_grid = [(float(r), float(R)) for r, R in ratio_grid]
    for r, R in ratio_grid:
        if not (0 < r < R < diam):
            raise GeometryError(f"need 0 < r < R < diam, got r={r}, R={R}")
    rng = np.random.default_rng(seed)
    pts = boundary.sample_random(centers, rng)
    v = tubular_fractions(boundary, pts, ratio_grid, mc_samples, seed)
    x = np.log([r / R for r, R in ratio_grid])
    with np.errstate(divide="ignore"):
        hi = np.log(np.quantile(v, quantile, axis=0))
        lo = np.log(np.quantile(v, 1.0 - quantile, axis=0))
    if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
        raise GeometryError("tubular volume vanished; increase mc_samples")
    lower = _fit(x, hi)[0]
    upper = _fit(x, lo)[0]
    return float(lower), float(upper)


# -- distance zeta function ----------------------------------------------------------

def _decomposition_trace(domain_or_W, depths=None) -> WhitneyDecomposition:
    if isinstance(domain_or_W, WhitneyDecomposition):
        return domain_or_W
    if isinstance(domain_or_W, (list, tuple)):
        ws = list(domain_or_W)
        if not ws or not all(isinstance(w, WhitneyDecomposition) for w in ws):
            raise TypeError("expected Whitney decompositions")
        if any(w.domain is not ws[0].domain for w in ws):
            raise ValueError("decompositions must share one domain")
        return max(ws, key=lambda w: w.max_depth)
    raise TypeError("expected a Whitney decomposition or a sequence of them")


def distance_zeta(W, q: float, quad_order: int = 3, growth_threshold: float = INCREMENT_THRESHOLD,
                  mode: str = "increment") -> ZetaResult:
    """Partial integrals of ``d^-q`` over Whitney cubes of depth ``<= k``.

    ``W`` is a decomposition or a sequence of them over one domain; cubes of
    level ``<= k`` of the deepest one form the depth-``k`` decomposition.
    """
    if not math.isfinite(q) or q >= 2:
        raise ValueError("q must be below the dimension 2")
    W = _decomposition_trace(W)
    per = cube_integrals(W, (lambda xy, d: np.ones(len(d))) if q == 0 else (lambda xy, d: np.power(d, -q)), quad_order)
    tr, depths = depth_trace(W, per)
    divergent = is_divergent(tr, growth_threshold, DIVERGENCE_RUN, mode)
    g = growth_factors(tr)
    growth_div = is_divergent(tr, GROWTH_THRESHOLD, DIVERGENCE_RUN, "growth")
    if divergent:
        value, err = math.inf, math.inf
    else:
        value, err = extrapolate(tr)
    return ZetaResult(float(q), tuple(float(t) for t in tr), bool(divergent), float(value), tuple(depths), float(err),
                      tuple(float(x) for x in g), bool(growth_div))


# -- dyadic cell averages ----------------------------------------------------------

@dataclass(frozen=True)
class _Level:
    """Dense per-cell arrays for one dyadic level over the domain's bounding box."""

    level: int
    side: float
    start: tuple  # integer index of entry [0, 0]
    integral: np.ndarray
    area: np.ndarray
    max_dist: np.ndarray


def _level_arrays(domain: Domain, W: WhitneyDecomposition, per_cube: np.ndarray, integrand, level: int,
                  quad_order: int, grid: int) -> _Level:
    side = W.base / 2.0**level
    ox, oy = W.origin
    bx0, by0, bx1, by1 = domain.bounding_box
    # Even start so that 2x2 blocks of any parity fit after padding.
    sx = int(math.floor((bx0 - ox) / side)) // 2 * 2 - 2
    sy = int(math.floor((by0 - oy) / side)) // 2 * 2 - 2
    nx = (int(math.ceil((bx1 - ox) / side)) - sx + 4) // 2 * 2
    ny = (int(math.ceil((by1 - oy) / side)) - sy + 4) // 2 * 2
    IX, IY = np.meshgrid(np.arange(sx, sx + nx), np.arange(sy, sy + ny), indexing="ij")
    x0 = ox + side * IX.ravel()
    y0 = oy + side * IY.ravel()
    cx = x0 + side / 2
    cy = y0 + side / 2
    # Areas: exact for cells far from the boundary, shapely otherwise.
    dc = _kernels.points_to_segments(cx, cy, domain.segments)
    half_diag = side * math.sqrt(2) / 2
    inside_c = contains(domain, np.column_stack([cx, cy]))
    area = np.where(inside_c & (dc >= half_diag), side * side, 0.0)
    cut = dc < half_diag
    if cut.any():
        poly = shapely.Polygon(domain.vertices)
        boxes = shapely.box(x0[cut], y0[cut], x0[cut] + side, y0[cut] + side)
        area[cut] = shapely.area(shapely.intersection(boxes, poly))
    # Upper bound on max d over the cell: grid maximum plus Lipschitz slack.
    t = np.linspace(0.0, 1.0, grid)
    gx, gy = np.meshgrid(t, t, indexing="ij")
    occupied = np.flatnonzero(area > 0)
    maxd = np.zeros(len(x0))
    if len(occupied):
        px = (x0[occupied, None] + side * gx.ravel()).ravel()
        py = (y0[occupied, None] + side * gy.ravel()).ravel()
        d = _kernels.points_to_segments(px, py, domain.segments).reshape(len(occupied), -1)
        maxd[occupied] = d.max(axis=1) + side * math.sqrt(2) / (2 * (grid - 1))
    # Integrals: Whitney cubes no larger than the cell are aggregated; cells
    # inside a larger Whitney cube are integrated directly.
    integ = np.zeros((nx, ny))
    small = W.level >= level
    if small.any():
        shift = (W.level[small] - level).astype(np.int64)
        kx = (W.ix[small] >> shift) - sx
        ky = (W.iy[small] >> shift) - sy
        np.add.at(integ, (kx, ky), per_cube[small])
    big = np.flatnonzero(~small)
    if len(big):
        rx, ry, rw = square_rule(quad_order)
        for L in np.unique(W.level[big]):
            cubes = big[W.level[big] == L]
            m = 1 << (level - int(L))
            sub = np.arange(m)
            ax = (W.ix[cubes, None, None] * m + sub[None, :, None] + 0 * sub[None, None, :]).ravel()
            ay = (W.iy[cubes, None, None] * m + 0 * sub[None, :, None] + sub[None, None, :]).ravel()
            cx0 = ox + side * ax
            cy0 = oy + side * ay
            px = (cx0[:, None] + side * rx).ravel()
            py = (cy0[:, None] + side * ry).ravel()
            d = _kernels.points_to_segments(px, py, domain.segments)
            vals = np.asarray(integrand(np.column_stack([px, py]), d), dtype=float).reshape(len(ax), -1)
            np.add.at(integ, (ax - sx, ay - sy), (vals * rw).sum(axis=1) * side * side)
    return _Level(level, side, (sx, sy), integ, area.reshape(nx, ny), maxd.reshape(nx, ny))


def _blocks(child: _Level, shift: tuple):
    """Cells one level up, translated by ``shift`` half-sides: sums of 2x2 children."""
    ax, ay = shift
    nx, ny = child.area.shape

    def view(a, reduce):
        b = a[ax : ax + nx - 2, ay : ay + ny - 2]
        b = b.reshape(b.shape[0] // 2, 2, b.shape[1] // 2, 2)
        return reduce(b, axis=(1, 3))

    start = ((child.start[0] + ax) // 2, (child.start[1] + ay) // 2)
    return start, view(child.integral, np.sum), view(child.area, np.sum), view(child.max_dist, np.max)


_SHIFTS = ((0, 0), (1, 0), (0, 1), (1, 1))


def _cell_table(domain: Domain, integrand, depth: int, cover_depth: int, quad_order: int = 3, grid: int = 5, W=None):
    """For each level ``j <= depth`` and half-side shift: cell integrals of
    ``integrand`` over the Whitney cover of depth ``cover_depth``, clipped
    areas and max-distance bounds."""
    if W is None:
        W = decompose(domain, cover_depth)
    elif W.max_depth > cover_depth:
        W = W.truncate(cover_depth)
    per = cube_integrals(W, integrand, quad_order)
    table = []
    for j in range(0, depth + 1):
        child = _level_arrays(domain, W, per, integrand, j + 1, quad_order, grid)
        for shift in _SHIFTS:
            start, I, A, M = _blocks(child, shift)
            table.append((j, shift, start, W.base / 2.0**j, I, A, M))
    return W, table


#: extra Whitney levels used to integrate cell averages beyond the cell depth
COVER_EXTRA = 4


def muckenhoupt_a1_constant(domain: Domain, alpha: float, cube_depths, quad_order: int = 3, grid: int = 5,
                            cover_extra: int = COVER_EXTRA) -> list:
    """Per-depth empirical A1 constant of ``d^-alpha``.

    At depth ``k`` the supremum runs over dyadic cells of side at least
    ``base / 2^k`` and their half-side translates.  Averages integrate over
    the Whitney cover of depth ``k + cover_extra``; the infimum uses an
    upper bound on the largest distance within the clipped cell.
    """
    if not (alpha >= 0 and math.isfinite(alpha)):
        raise ValueError("alpha must be a nonnegative real")
    depths = [int(k) for k in cube_depths]
    out = []
    W_all = decompose(domain, max(depths) + cover_extra)

    def integrand(xy, d):
        return np.ones(len(d)) if alpha == 0 else np.power(d, -alpha)

    for k in depths:
        _, table = _cell_table(domain, integrand, k, k + cover_extra, quad_order, grid, W_all)
        best = 0.0
        for _, _, _, _, I, A, M in table:
            ok = (A > 0) & (I > 0)
            if ok.any():
                r = I[ok] / A[ok] * (M[ok] ** alpha if alpha else 1.0)
                best = max(best, float(r.max()))
        out.append(best)
    return out


def maximal_function(domain: Domain, w, p, cube_depths, quad_order: int = 3, cover_extra: int = COVER_EXTRA) -> float:
    """Largest average of ``w`` over ``Q ∩ Ω`` for dyadic cells ``Q`` (listed
    levels, all half-side translates) containing ``p``.

    Averages use the same discretisation as :func:`muckenhoupt_a1_constant`
    at depth ``max(cube_depths)``.
    """
    w = as_field(w)
    px, py = tuple(p) if isinstance(p, Point) else tuple(Point(*p))
    levels = sorted({int(k) for k in cube_depths})
    depth = max(levels)
    W, table = _cell_table(domain, lambda xy, d: w(xy, d), depth, depth + cover_extra, quad_order)
    ox, oy = W.origin
    best = 0.0
    for j, shift, start, side, I, A, M in table:
        if j not in levels:
            continue
        a = int(math.floor((px - ox) / side - shift[0] / 2)) - start[0]
        b = int(math.floor((py - oy) / side - shift[1] / 2)) - start[1]
        if 0 <= a < A.shape[0] and 0 <= b < A.shape[1] and A[a, b] > 0:
            best = max(best, float(I[a, b] / A[a, b]))
    return best


# -- homogeneity -------------------------------------------------------------------

def neighbourhood_ball_volume(boundary: BoundarySampler, x, r: float, R: float, n: int, rng) -> Estimate:
    """``|{y : dist(y, E) <= r, |y - x| <= R}|`` by defensive importance sampling.

    Half the points are uniform in the ball; the other half lie on nearby
    segments offset uniformly within ``r``, whose density at ``y`` is
    proportional to the boundary length inside ``B(y, r)``.  The uniform
    half keeps every weight below ``2 |B(x, R)|``.
    """
    x = np.asarray(x, dtype=float)
    ball = math.pi * R * R
    seg = segments_near(boundary.segments, x, R + r)
    local = BoundarySampler.from_segments(seg) if len(seg) else None
    if local is None or local.total_length == 0.0:
        y = _ball_samples(tuple(x), R, n, rng)
        hit = boundary.distance(y) <= r
        return Estimate(ball * float(hit.mean()), stderr=ball * float(hit.std()) / math.sqrt(n))
    n_ball = n // 2
    y = np.vstack([
        _ball_samples(tuple(x), R, n_ball, rng),
        local.sample_random(n - n_ball, rng) + _ball_samples((0.0, 0.0), r, n - n_ball, rng),
    ])
    in_ball = np.hypot(y[:, 0] - x[0], y[:, 1] - x[1]) <= R
    chord = _kernels.chord_lengths(np.ascontiguousarray(y[:, 0]), np.ascontiguousarray(y[:, 1]), seg, r)
    tube_density = chord / (local.total_length * math.pi * r * r)
    density = 0.5 * in_ball / ball + 0.5 * tube_density
    vals = np.where(in_ball & (chord > 0), 1.0 / np.where(density > 0, density, 1.0), 0.0)
    return Estimate(float(vals.mean()), stderr=float(vals.std()) / math.sqrt(n))


def homogeneity_constant(boundary: BoundarySampler, sigma: float, samples: int = 1000, seed: int = 0,
                         mc_samples: int = 1024, r_min: float | None = None) -> float:
    """Largest sampled ``|V(E, x, lambda, r)| / (r^2 lambda^sigma)``.

    ``V`` is the part of the closed ``r``-neighbourhood of ``E`` within
    ``lambda r`` of ``x``.  Triples use ``x`` uniform on ``E`` and log-uniform
    ``r`` in ``[r_min, diam]`` and ``lambda`` in ``[1, 2 diam / r]``.
    """
    if not (0 <= sigma <= 2):
        raise ValueError("sigma must lie in [0, 2]")
    rng = np.random.default_rng(seed)
    diam = boundary.diam
    r_min = 1e-3 * diam if r_min is None else r_min
    xs = boundary.sample_random(samples, rng)
    rs = np.exp(rng.uniform(math.log(r_min), math.log(diam), samples))
    lams = np.exp(rng.uniform(0.0, np.log(2.0 * diam / rs)))
    best = 0.0
    for x, r, lam in zip(xs, rs, lams):
        vol = neighbourhood_ball_volume(boundary, x, r, lam * r, mc_samples, rng).value
        best = max(best, vol / (r * r * lam**sigma))
    return float(best)
