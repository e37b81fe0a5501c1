"""Weighted Lebesgue norms and weighted Gagliardo seminorms by Whitney-cube
quadrature.

The double integral over the domain is split into ordered cube pairs.
Non-touching pairs use tensor Gauss-Legendre nodes whose density is chosen
per cube from the ratio gap / side.  Touching pairs and each cube with
itself use the singular reference rules of :mod:`gagliardo.quadrature`.
Every unordered pair is visited once and both orientations are summed at
the same nodes, so swapping the two weights leaves the result unchanged
bit for bit and truncated sums never exceed full sums.

Contributions are binned by the larger level of the two cubes; since the
cubes of level at most ``k`` are exactly the depth-``k`` decomposition, one
pass yields the whole refinement trace.
"""

from __future__ import annotations

import math
import weakref
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .estimate import Estimate
from .fields import ScalarField, WeightField, as_field
from .quadrature import near_rule, square_rule
from .series import extrapolate, is_divergent
from .whitney import SQRT2, WhitneyDecomposition

#: gap/side ratios at which a cube drops to 1, 2x2, qxq, 2x2 composite qxq nodes
FAR_THRESHOLDS = (16.0, 6.0, 2.0, 0.75)
_CHUNK_NODES = 2_000_000


class QuadratureError(RuntimeError):
    """Internal consistency failure (e.g. a node outside the domain)."""


class HypothesisViolation(ValueError):
    """A theorem's finiteness hypothesis fails for the given input."""


@dataclass(frozen=True)
class SpaceParams:
    """Smoothness ``s``, integrability ``p``, weight exponents ``alpha`` (on
    the outer variable ``x``) and ``beta`` (on ``y``), truncation ``theta``."""

    s: float
    p: float
    alpha: float = 0.0
    beta: float = 0.0
    theta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not (self.p >= 1.0 and math.isfinite(self.p)):
            raise ValueError(f"p must lie in [1, inf), got {self.p}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def total_exponent(self) -> float:
        """``sp + alpha + beta``, the exponent governing density."""
        return self.sp + self.alpha + self.beta

    def replace(self, **kw) -> "SpaceParams":
        d = dict(s=self.s, p=self.p, alpha=self.alpha, beta=self.beta, theta=self.theta)
        d.update(kw)
        return SpaceParams(**d)


class Ratio(float):
    """A float carrying a diagnostic string for sentinel values."""

    def __new__(cls, value, diagnostic: str = ""):
        obj = super().__new__(cls, value)
        obj.diagnostic = diagnostic
        return obj


# -- per-decomposition geometry cache -------------------------------------------

@dataclass
class _Geometry:
    ia0: np.ndarray
    ia1: np.ndarray
    ib0: np.ndarray
    ib1: np.ndarray
    reach: np.ndarray
    cand_ptr: np.ndarray
    cand_idx: np.ndarray
    touching: np.ndarray = field(default=None)


_GEOM: "weakref.WeakKeyDictionary[WhitneyDecomposition, _Geometry]" = weakref.WeakKeyDictionary()


def _geometry(W: WhitneyDecomposition) -> _Geometry:
    g = _GEOM.get(W)
    if g is None:
        K = int(W.level.max())
        scale = np.left_shift(1, K - W.level)
        h = W.side
        reach = W.dist + SQRT2 * h
        # edges within dist + diam of the box hold the nearest boundary point
        # of every point of the box
        ptr, idx = _kernels.candidate_edges(W.x0, W.y0, W.x0 + h, W.y0 + h, reach * (1 + 1e-9) + 1e-14, W.domain.segments)
        g = _Geometry(W.ix * scale, (W.ix + 1) * scale, W.iy * scale, (W.iy + 1) * scale, reach, ptr, idx)
        g.touching = W.neighbor_pairs()
        _GEOM[W] = g
    return g


def node_distance(W: WhitneyDecomposition, owner: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """Distance to the boundary for points lying in the cube ``owner``."""
    g = _geometry(W)
    return _kernels.points_to_segments_owned(
        np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1]),
        np.ascontiguousarray(owner, dtype=np.int64), g.cand_ptr, g.cand_idx, W.domain.segments,
    )


# -- weights --------------------------------------------------------------------

def _weights(params: SpaceParams, x_weight, y_weight):
    xw = x_weight if x_weight is not None else WeightField.distance_power(-params.alpha)
    yw = y_weight if y_weight is not None else WeightField.distance_power(-params.beta)
    return xw, yw


def _weight_key(w: WeightField):
    return ("d", w.exponent) if w.field is None else ("f", id(w.field))


# -- far-field node store -------------------------------------------------------

def _far_nodes(W, f, xw, yw, q):
    rules = [
        (np.array([0.5]), np.array([0.5]), np.array([1.0])),
        square_rule(2),
        square_rule(q),
        square_rule(q, 2),
        square_rule(q, 4),
    ]
    n = len(W)
    ptr = np.zeros((len(rules), n + 1), dtype=np.int64)
    xs, ys, ws, owners = [], [], [], []
    start = 0
    for k, (rx, ry, rw) in enumerate(rules):
        m = len(rw)
        ptr[k] = start + m * np.arange(n + 1)
        start += m * n
        xs.append((W.x0[:, None] + W.side[:, None] * rx[None, :]).ravel())
        ys.append((W.y0[:, None] + W.side[:, None] * ry[None, :]).ravel())
        ws.append((W.side[:, None] ** 2 * rw[None, :]).ravel())
        owners.append(np.repeat(np.arange(n), m))
    xy = np.column_stack([np.concatenate(xs), np.concatenate(ys)])
    owner = np.concatenate(owners)
    d = node_distance(W, owner, xy)
    if np.any(d <= 0):
        raise QuadratureError("quadrature node on the boundary")
    F = np.ascontiguousarray(f(xy, d), dtype=float)
    V = np.ascontiguousarray(xw(xy, d), dtype=float)
    U = np.ascontiguousarray(yw(xy, d), dtype=float)
    return ptr, np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1]), F, np.concatenate(ws), V, U, d


# -- near pairs -----------------------------------------------------------------

def _near_groups(W, g):
    """Self pairs and touching pairs grouped by relative configuration."""
    n = len(W)
    pairs = np.vstack([np.column_stack([np.arange(n), np.arange(n)]), g.touching]) if len(g.touching) else np.column_stack([np.arange(n), np.arange(n)])
    i, j = pairs[:, 0], pairs[:, 1]
    li = (g.ia1 - g.ia0)[i]
    ox = (g.ia0[j] - g.ia0[i]) / li
    oy = (g.ib0[j] - g.ib0[i]) / li
    r = (g.ia1[j] - g.ia0[j]) / li
    keys = np.column_stack([ox, oy, r])
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    return [(tuple(uniq[k]), pairs[inv == k]) for k in range(len(uniq))]


def _near_sums(W, f, xw, yw, params, theta, nbins, rule_opts):
    g = _geometry(W)
    sp, p = params.sp, params.p
    full = np.zeros(nbins)
    trunc = np.zeros(nbins)
    tsym = np.zeros(nbins)
    for (ox, oy, r), pairs in _near_groups(W, g):
        mx, my, zx, zy, w = near_rule(float(ox), float(oy), float(r), params.s, p, **rule_opts)
        m = len(w)
        step = max(1, _CHUNK_NODES // max(m, 1))
        for c0 in range(0, len(pairs), step):
            pr = pairs[c0 : c0 + step]
            i, j = pr[:, 0], pr[:, 1]
            li = W.side[i][:, None]
            cx, cy = W.x0[i][:, None], W.y0[i][:, None]
            xa = np.column_stack([(cx + li * (mx - zx / 2)).ravel(), (cy + li * (my - zy / 2)).ravel()])
            xb = np.column_stack([(cx + li * (mx + zx / 2)).ravel(), (cy + li * (my + zy / 2)).ravel()])
            da = node_distance(W, np.repeat(i, m), xa)
            db = node_distance(W, np.repeat(j, m), xb)
            if np.any(da <= 0) or np.any(db <= 0):
                raise QuadratureError("quadrature node on the boundary")
            df = np.abs(f(xa, da) - f(xb, db)).reshape(len(pr), m)
            gval = df * df if p == 2.0 else df**p
            kw = w[None, :] * li ** (2.0 - sp)
            va, ua = xw(xa, da).reshape(len(pr), m), yw(xa, da).reshape(len(pr), m)
            vb, ub = xw(xb, db).reshape(len(pr), m), yw(xb, db).reshape(len(pr), m)
            p1 = va * ub
            p2 = vb * ua
            base = kw * gval
            half = np.where(i == j, 0.5, 1.0)
            rz = li * np.hypot(zx, zy)[None, :]
            i1 = rz < theta * da.reshape(len(pr), m)
            i2 = rz < theta * db.reshape(len(pr), m)
            sf = (base * (p1 + p2)).sum(axis=1) * half
            st = (base * (i1 * p1 + i2 * p2)).sum(axis=1) * half
            ss = (base * (p1 + p2) * (i1.astype(float) + i2)).sum(axis=1) * half
            bins = np.maximum(W.level[i], W.level[j])
            # bincount sums in index order: deterministic
            full += np.bincount(bins, sf, minlength=nbins)
            trunc += np.bincount(bins, st, minlength=nbins)
            tsym += np.bincount(bins, ss, minlength=nbins)
    return full, trunc, tsym


# -- pair engine ----------------------------------------------------------------

@dataclass(frozen=True)
class PairSums:
    """Cumulative double integrals per depth (index = depth)."""

    depths: tuple
    full: np.ndarray
    truncated: np.ndarray
    truncated_symmetric: np.ndarray


_CACHE: "OrderedDict" = OrderedDict()
_CACHE_SIZE = 16


def pair_sums(f, W: WhitneyDecomposition, params: SpaceParams, x_weight=None, y_weight=None,
              quad_order: int = 3, theta: float | None = None, far_thresholds=FAR_THRESHOLDS,
              rule_opts: dict | None = None) -> PairSums:
    """Full and truncated double integrals of ``|f(x)-f(y)|^p |x-y|^(-2-sp)
    v(x) w(y)`` for every depth of ``W``."""
    f = as_field(f)
    xw, yw = _weights(params, x_weight, y_weight)
    theta = params.theta if theta is None else float(theta)
    rule_opts = dict(rule_opts or {})
    key = (id(W), id(f), repr(f), params.s, params.p, _weight_key(xw), _weight_key(yw), quad_order, theta,
           tuple(far_thresholds), tuple(sorted(rule_opts.items())))
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is W and hit[1] is f:
        _CACHE.move_to_end(key)
        return hit[2]
    nbins = int(W.level.max()) + 1
    if f.is_constant:
        z = np.zeros(nbins)
        res = PairSums(tuple(range(nbins)), z, z.copy(), z.copy())
    else:
        g = _geometry(W)
        ptr, X, Y, F, Wq, V, U, D = _far_nodes(W, f, xw, yw, quad_order)
        ff, ft, fs = _kernels.far_pairs(
            g.ia0, g.ia1, g.ib0, g.ib1, W.x0, W.y0, W.side, g.reach, W.level, nbins,
            ptr, X, Y, F, Wq, V, U, D, np.asarray(far_thresholds, dtype=float),
            float(params.sp), float(params.p), theta,
        )
        nf, nt, ns = _near_sums(W, f, xw, yw, params, theta, nbins, rule_opts)
        res = PairSums(
            tuple(range(nbins)),
            np.cumsum(ff.sum(axis=0) + nf),
            np.cumsum(ft.sum(axis=0) + nt),
            np.cumsum(fs.sum(axis=0) + ns),
        )
    _CACHE[key] = (W, f, res)
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return res


def _trace_start(W: WhitneyDecomposition) -> int:
    return int(W.level.min())


def _root_estimate(trace_int, depths, p, extrapolate_limit=True) -> Estimate:
    trace_int = np.asarray(trace_int, dtype=float)
    # the coarsest level holds only the first cubes that fit, so its
    # increment is a start-up transient rather than part of the tail
    divergent = is_divergent(trace_int[1:])
    raw = float(trace_int[-1])
    if divergent:
        value_int, err_int = math.inf, math.inf
    elif extrapolate_limit:
        value_int, err_int = extrapolate(trace_int)
    else:
        value_int, err_int = raw, float(abs(trace_int[-1] - trace_int[-2])) if len(trace_int) > 1 else 0.0
    root = value_int ** (1.0 / p)
    err = 0.0 if value_int in (0.0, math.inf) else root * err_int / (p * value_int)
    return Estimate(
        value=float(root),
        refinement_trace=tuple(float(v) ** (1.0 / p) for v in trace_int),
        divergent=divergent,
        error=float(err),
        depths=tuple(depths),
        extra={"integral": float(value_int), "raw_integral": raw, "integral_trace": [float(v) for v in trace_int],
               "raw": raw ** (1.0 / p)},
    )


def _select(W, sums_array):
    lo = _trace_start(W)
    depths = list(range(lo, len(sums_array)))
    return sums_array[lo:], depths


def full_seminorm(f, domain=None, params: SpaceParams = None, w: WeightField | None = None, v: WeightField | None = None,
                  W: WhitneyDecomposition = None, quad_order: int = 3, extrapolate_limit: bool = True,
                  symmetric: bool = False, **opts) -> Estimate:
    """Weighted Gagliardo seminorm ``(int int |f(x)-f(y)|^p / |x-y|^(2+sp)
    w(y) v(x) dy dx)^(1/p)``.

    ``v`` weights the outer variable and ``w`` the inner one; by default
    ``v = d^-alpha`` and ``w = d^-beta``.  ``symmetric=True`` uses the weight
    ``v(x) w(y) + v(y) w(x)``.  The value is the limit extrapolated from the
    depth trace; ``extra["raw"]`` holds the finest-depth quadrature value.
    """
    _check_domain(domain, W)
    sums = pair_sums(f, W, params, x_weight=v, y_weight=w, quad_order=quad_order, **opts)
    # both orientations of every unordered pair are already in ``full``;
    # the symmetric weight integrates each orientation twice
    arr = 2.0 * sums.full if symmetric else sums.full
    tr, depths = _select(W, arr)
    return _root_estimate(tr, depths, params.p, extrapolate_limit)


def truncated_seminorm(f, domain=None, params: SpaceParams = None, w: WeightField | None = None, v: WeightField | None = None,
                       W: WhitneyDecomposition = None, quad_order: int = 3, symmetric: bool = False,
                       extrapolate_limit: bool = True, theta: float | None = None, **opts) -> Estimate:
    """Seminorm restricted to ``y`` in ``B(x, theta d(x))``.

    ``symmetric=True`` integrates ``v(x) w(y) + v(y) w(x)`` over the same
    region.  ``theta`` overrides ``params.theta`` and may exceed 1 (used by
    the Hardy ratio).
    """
    _check_domain(domain, W)
    sums = pair_sums(f, W, params, x_weight=v, y_weight=w, quad_order=quad_order, theta=theta, **opts)
    arr = sums.truncated_symmetric if symmetric else sums.truncated
    tr, depths = _select(W, arr)
    return _root_estimate(tr, depths, params.p, extrapolate_limit)


def _check_domain(domain, W):
    if W is None:
        raise ValueError("a Whitney decomposition is required")
    if domain is not None and domain is not W.domain:
        raise ValueError("decomposition was built on a different domain")


# -- single integrals -----------------------------------------------------------

def cube_integrals(W: WhitneyDecomposition, integrand, quad_order: int = 3) -> np.ndarray:
    """Per-cube tensor Gauss-Legendre integrals of ``integrand(xy, d)``."""
    rx, ry, rw = square_rule(quad_order)
    m = len(rw)
    xy = np.column_stack([
        (W.x0[:, None] + W.side[:, None] * rx).ravel(),
        (W.y0[:, None] + W.side[:, None] * ry).ravel(),
    ])
    d = node_distance(W, np.repeat(np.arange(len(W)), m), xy)
    if np.any(d <= 0):
        raise QuadratureError("quadrature node on the boundary")
    vals = np.asarray(integrand(xy, d), dtype=float).reshape(len(W), m)
    return (vals * rw[None, :]).sum(axis=1) * W.side**2


def depth_trace(W: WhitneyDecomposition, per_cube: np.ndarray) -> tuple:
    nb = int(W.level.max()) + 1
    sums = np.cumsum(np.bincount(W.level, per_cube, minlength=nb))
    lo = _trace_start(W)
    return sums[lo:], list(range(lo, nb))


def lp_norm(f, domain=None, gamma: float = 0.0, W: WhitneyDecomposition = None, quad_order: int = 3,
            p: float = 1.0, extrapolate_limit: bool = True) -> Estimate:
    """``int |f|^p d^-gamma dx`` (the p-th power of the weighted norm).

    Values are extrapolated in depth; divergence is flagged when the depth
    increments stop shrinking.
    """
    _check_domain(domain, W)
    f = as_field(f)

    def integrand(xy, d):
        a = np.abs(f(xy, d))
        a = a if p == 1.0 else a**p
        return a if gamma == 0.0 else a * np.power(d, -gamma)

    tr, depths = depth_trace(W, cube_integrals(W, integrand, quad_order))
    return _trace_estimate(tr, depths, extrapolate_limit)


def _trace_estimate(tr, depths, extrapolate_limit=True) -> Estimate:
    divergent = is_divergent(tr)
    if divergent:
        value, err = math.inf, math.inf
    elif extrapolate_limit:
        value, err = extrapolate(tr)
    else:
        value, err = float(tr[-1]), float(abs(tr[-1] - tr[-2])) if len(tr) > 1 else 0.0
    return Estimate(value=float(value), refinement_trace=tuple(float(t) for t in tr), divergent=divergent,
                    error=float(err), depths=tuple(depths), extra={"raw": float(tr[-1])})


# -- ratios ---------------------------------------------------------------------

def comparability_ratio(f, domain=None, params: SpaceParams = None, W: WhitneyDecomposition = None,
                        quad_order: int = 3, extrapolate_limit: bool = False, **opts) -> Ratio:
    """Full over truncated seminorm, both with weights ``d^-alpha``, ``d^-beta``.

    By default both values are the quadrature sums over pairs of cubes in
    ``W``, i.e. the two seminorms on the union of the accepted cubes.  The
    ratio then increases monotonically toward its limit as depth grows;
    extrapolating each value separately is noisier at moderate depth.
    """
    opts["extrapolate_limit"] = extrapolate_limit
    full = full_seminorm(f, domain, params, W=W, quad_order=quad_order, **opts)
    trunc = truncated_seminorm(f, domain, params, W=W, quad_order=quad_order, **opts)
    if trunc.value == 0.0:
        if full.value == 0.0:
            return Ratio(math.nan, "both zero")
        return Ratio(math.inf, "truncated seminorm vanishes while the full one does not")
    if full.divergent:
        return Ratio(math.inf, "full seminorm divergent")
    return Ratio(full.value / trunc.value)


def symmetrization_ratio(f, domain=None, params: SpaceParams = None, W: WhitneyDecomposition = None,
                         quad_order: int = 3, **opts) -> Ratio:
    """``[f]_(alpha,beta) / [f]_(alpha+beta,0)`` from the quadrature sums over
    pairs of cubes in ``W``.

    Young's inequality bounds the numerator's p-th power by twice the
    denominator's; the sums stay finite at every depth even when the
    denominator diverges in the limit.
    """
    num = full_seminorm(f, domain, params, W=W, quad_order=quad_order, extrapolate_limit=False, **opts)
    den = full_seminorm(f, domain, params.replace(alpha=params.alpha + params.beta, beta=0.0), W=W,
                        quad_order=quad_order, extrapolate_limit=False, **opts)
    a, b = num.extra["raw"], den.extra["raw"]
    if b == 0.0:
        return Ratio(math.nan, "both zero") if a == 0.0 else Ratio(math.inf, "denominator vanishes")
    return Ratio(a / b)


def hardy_ratio(u, domain=None, params: SpaceParams = None, R: float = 1.0, xi: int = 0,
                W: WhitneyDecomposition = None, quad_order: int = 3, **opts) -> Ratio:
    """``int |u|^p d^-(sp+alpha+beta)`` over the truncated seminorm (radius
    ``R d(x)``) to the power p plus ``xi`` times ``int |u|^p``."""
    if xi not in (0, 1):
        raise ValueError("xi must be 0 or 1")
    lhs = lp_norm(u, domain, params.total_exponent, W, quad_order, p=params.p)
    if lhs.divergent:
        raise HypothesisViolation("hypothesis violated: left-hand side infinite")
    sums = pair_sums(u, W, params, quad_order=quad_order, theta=R, **opts)
    tr, _ = _select(W, sums.truncated)
    semi, _ = extrapolate(tr)
    rhs = semi
    if xi:
        rhs += lp_norm(u, domain, 0.0, W, quad_order, p=params.p).value
    if rhs == 0.0:
        if lhs.value == 0.0:
            return Ratio(math.nan, "both zero")
        return Ratio(math.inf, "right-hand side vanishes")
    return Ratio(lhs.value / rhs)
