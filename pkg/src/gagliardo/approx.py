"""Cutoffs, Whitney partition of unity, mollification and density experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit, prange
from scipy import integrate
from scipy.spatial import cKDTree

from .fields import CutoffVn, FunctionField, ScalarField, as_field
from .geometry import Domain, GeometryError, Point, contains, dist_to_boundary
from .quadrature import gauss_legendre
from .seminorm import SpaceParams, full_seminorm, lp_norm
from .whitney import EPSILON, WhitneyDecomposition, locate

# -- cutoff ---------------------------------------------------------------------


def eval_vn(domain: Domain, n: int, p) -> float:
    """``max(min(2 - n d(p), 1), 0)`` at an interior point."""
    pt = p if isinstance(p, Point) else Point(*p)
    if not contains(domain, pt):
        raise GeometryError("point must lie in the domain")
    d = dist_to_boundary(domain, pt)
    return float(CutoffVn(n)(np.array([[pt.x, pt.y]]), np.array([d]))[0])


# -- smooth profiles --------------------------------------------------------------


def _smooth_step(u):
    """1 for ``u <= 0``, 0 for ``u >= 1``, C-infinity in between."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u < 1.0, np.exp(-1.0 / np.where(u < 1.0, 1.0 - u, 1.0)), 0.0)
        b = np.where(u > 0.0, np.exp(-1.0 / np.where(u > 0.0, u, 1.0)), 0.0)
    return a / (a + b)


@njit(cache=True)
def _step(u):
    if u <= 0.0:
        return 1.0
    if u >= 1.0:
        return 0.0
    a = math.exp(-1.0 / (1.0 - u))
    b = math.exp(-1.0 / u)
    return a / (a + b)


@njit(cache=True)
def _raw(px, py, cx, cy, half, collar):
    ux = (abs(px - cx) - half) / collar
    uy = (abs(py - cy) - half) / collar
    return _step(ux) * _step(uy)


# -- partition of unity ------------------------------------------------------------


class PartitionOfUnity:
    """``psi_n = raw_n / sum_m raw_m`` with ``raw_n`` a tensor smooth step equal
    to 1 on ``Q_n`` and vanishing outside ``(1 + epsilon) Q_n``."""

    def __init__(self, W: WhitneyDecomposition, epsilon: float = EPSILON):
        if not (0 < epsilon < 0.25):
            raise ValueError("epsilon must lie in (0, 1/4)")
        self.W = W
        self.epsilon = float(epsilon)
        self.center_x = np.ascontiguousarray(W.centers[:, 0])
        self.center_y = np.ascontiguousarray(W.centers[:, 1])
        self.half = np.ascontiguousarray(W.side / 2.0)
        self.collar = np.ascontiguousarray(self.epsilon * W.side / 2.0)

    @cached_property
    def _trees(self):
        out = []
        for L in np.unique(self.W.level):
            idx = np.flatnonzero(self.W.level == L)
            out.append((idx, cKDTree(self.W.centers[idx]), float(self.half[idx[0]])))
        return out

    @cached_property
    def _neighbors_closed(self):
        ptr, idx = self.W.neighbor_graph
        n = len(self.W)
        rows = np.concatenate([np.arange(n), np.repeat(np.arange(n), np.diff(ptr))])
        cols = np.concatenate([np.arange(n), idx])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        new_ptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
        return new_ptr.astype(np.int64), cols.astype(np.int64)

    def candidates(self, pts, grow: float | None = None):
        """``(point index, cube index)`` pairs with the point inside the cube
        dilated by ``1 + grow`` (default: the collar).

        Dilations by less than a fifth only reach cubes touching the cube
        that contains the point, so covered points search that closed
        neighbourhood; uncovered points query per-level trees.
        """
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        grow = self.epsilon if grow is None else grow
        reach = self.half * (1.0 + grow) * (1 + 1e-12)
        home = locate(self.W, pts)
        pi, ci = [], []
        covered = np.flatnonzero(home >= 0)
        if len(covered) and grow < 0.2:
            nptr, nidx = self._neighbors_closed
            h = home[covered]
            counts = nptr[h + 1] - nptr[h]
            rows = np.repeat(covered, counts)
            starts = np.repeat(nptr[h], counts)
            cols = nidx[starts + np.arange(len(rows)) - np.repeat(np.cumsum(counts) - counts, counts)]
            ok = (np.abs(pts[rows, 0] - self.center_x[cols]) <= reach[cols]) & \
                 (np.abs(pts[rows, 1] - self.center_y[cols]) <= reach[cols])
            pi.append(rows[ok])
            ci.append(cols[ok])
            rest = np.flatnonzero(home < 0)
        else:
            rest = np.arange(len(pts))
        if len(rest):
            for idx, tree, half in self._trees:
                lists = tree.query_ball_point(pts[rest], half * (1.0 + grow) * (1 + 1e-12), p=np.inf)
                counts = np.fromiter((len(lst) for lst in lists), dtype=np.int64, count=len(lists))
                if counts.sum() == 0:
                    continue
                pi.append(np.repeat(rest, counts))
                ci.append(idx[np.concatenate([np.asarray(lst, dtype=np.int64) for lst in lists if lst])])
        if not pi:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        pi = np.concatenate(pi)
        ci = np.concatenate(ci)
        order = np.lexsort((ci, pi))
        return pi[order], ci[order]

    def raw(self, cube: np.ndarray, pts: np.ndarray) -> np.ndarray:
        cube = np.asarray(cube)
        ux = (np.abs(pts[:, 0] - self.center_x[cube]) - self.half[cube]) / self.collar[cube]
        uy = (np.abs(pts[:, 1] - self.center_y[cube]) - self.half[cube]) / self.collar[cube]
        return _smooth_step(ux) * _smooth_step(uy)

    def raw_sum(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        pi, ci = self.candidates(pts)
        return np.bincount(pi, self.raw(ci, pts[pi]), minlength=len(pts))

    def values(self, pts):
        """Sparse partition values: ``(point index, cube index, psi)``."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        pi, ci = self.candidates(pts)
        raw = self.raw(ci, pts[pi])
        total = np.bincount(pi, raw, minlength=len(pts))
        keep = raw > 0
        return pi[keep], ci[keep], raw[keep] / total[pi[keep]]

    def sum(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        pi, _, psi = self.values(pts)
        return np.bincount(pi, psi, minlength=len(pts))

    def lipschitz_constant(self, samples: int = 2000, seed: int = 0, step: float = 1e-4) -> float:
        """Largest sampled ``|psi_n(x) - psi_n(y)| * l(Q_n) / |x - y|``."""
        rng = np.random.default_rng(seed)
        W = self.W
        cubes = rng.integers(0, len(W), samples)
        span = self.half[cubes] * (1.0 + self.epsilon)
        x = np.column_stack([
            self.center_x[cubes] + rng.uniform(-1, 1, samples) * span,
            self.center_y[cubes] + rng.uniform(-1, 1, samples) * span,
        ])
        ang = rng.uniform(0, 2 * math.pi, samples)
        h = step * W.side[cubes]
        y = x + np.column_stack([h * np.cos(ang), h * np.sin(ang)])
        best = 0.0
        for cube, a, b, hh, l in zip(cubes, x, y, h, W.side[cubes]):
            pa = eval_psi(self, int(cube), a)
            pb = eval_psi(self, int(cube), b)
            best = max(best, abs(pa - pb) * l / hh)
        return best


def eval_psi(pou: PartitionOfUnity, cube_index: int, p) -> float:
    pt = np.asarray(tuple(p), dtype=float).reshape(1, 2)
    raw = pou.raw(np.array([cube_index]), pt)[0]
    if raw == 0.0:
        return 0.0
    return float(raw / pou.raw_sum(pt)[0])


# -- mollifier --------------------------------------------------------------------


def _profile(rho):
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = rho < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - rho[inside] ** 2))
    return out


#: mass of ``exp(-1 / (1 - |x|^2))`` over the unit disk
BUMP_MASS = 2.0 * math.pi * integrate.quad(lambda r: float(_profile(np.array(r))) * r, 0.0, 1.0,
                                           epsabs=1e-14, epsrel=1e-13)[0]


def bump(xy) -> np.ndarray:
    """Unit-mass radial bump supported in the unit disk."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    return _profile(np.hypot(xy[:, 0], xy[:, 1])) / BUMP_MASS


@dataclass(frozen=True)
class MollifierSpec:
    """Mollification radius ``eta(Q) = delta l(Q)`` with ``delta < epsilon / 2``."""

    delta: float
    epsilon: float = EPSILON
    radial_points: int = 6
    angular_points: int = 12

    def __post_init__(self):
        if not (0 < self.delta < self.epsilon / 2):
            raise ValueError(f"delta must lie in (0, epsilon/2) = (0, {self.epsilon / 2})")

    def eta(self, side):
        return self.delta * np.asarray(side)

    @property
    def rule(self) -> tuple:
        """Offsets in the unit disk and weights of the polar rule for the
        bump, rescaled to unit discrete mass."""
        t, w = gauss_legendre(self.radial_points)
        phi = 2 * math.pi * (np.arange(self.angular_points) + 0.5) / self.angular_points
        R, P = np.meshgrid(t, phi, indexing="ij")
        wts = (w[:, None] * t[:, None] * _profile(t)[:, None] * np.full_like(P, 2 * math.pi / self.angular_points))
        wts = wts.ravel()
        return np.column_stack([(R * np.cos(P)).ravel(), (R * np.sin(P)).ravel()]), wts / wts.sum()


@njit(cache=True, parallel=True)
def _own_raw(pair_cube, zx, zy, cx, cy, half, collar, m):
    out = np.zeros(zx.shape[0])
    for k in prange(pair_cube.shape[0]):
        c = pair_cube[k]
        for j in range(m):
            q = k * m + j
            out[q] = _raw(zx[q], zy[q], cx[c], cy[c], half[c], collar[c])
    return out


@njit(cache=True, parallel=True)
def _mollify(pair_cube, zx, zy, own, fz, wq, cx, cy, half, collar, nptr, nidx, m):
    """Per (point, cube) pair: ``sum_j w_j f(z_j) psi_cube(z_j)``."""
    npairs = pair_cube.shape[0]
    out = np.zeros(npairs)
    for k in prange(npairs):
        c = pair_cube[k]
        acc = 0.0
        for j in range(m):
            q = k * m + j
            if fz[q] == 0.0 or own[q] == 0.0:
                continue
            tot = 0.0
            for a in range(nptr[c], nptr[c + 1]):
                o = nidx[a]
                tot += _raw(zx[q], zy[q], cx[o], cy[o], half[o], collar[o])
            acc += wq[j] * fz[q] * own[q] / tot
        out[k] = acc
    return out


def p_eta_values(f, pou: PartitionOfUnity, spec: MollifierSpec, pts, chunk: int = 20000) -> np.ndarray:
    """``P^eta f = sum_n (f psi_n) * h_eta(Q_n)`` at each point, ``f`` extended by 0.

    ``psi_n`` vanishes outside ``(1 + epsilon) Q_n``, which lies inside the
    domain, so ``f`` is only evaluated where some ``psi_n`` is positive.
    """
    f = as_field(f)
    W = pou.W
    domain = W.domain
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    off, wq = spec.rule
    m = len(wq)
    nptr, nidx = pou._neighbors_closed
    out = np.zeros(len(pts))
    for a in range(0, len(pts), chunk):
        sub = pts[a : a + chunk]
        pi, ci = pou.candidates(sub, grow=pou.epsilon + 2.0 * spec.delta)
        if len(pi) == 0:
            continue
        ci = ci.astype(np.int64)
        eta = spec.delta * W.side[ci]
        zx = np.ascontiguousarray((sub[pi, 0][:, None] - eta[:, None] * off[None, :, 0]).ravel())
        zy = np.ascontiguousarray((sub[pi, 1][:, None] - eta[:, None] * off[None, :, 1]).ravel())
        own = _own_raw(ci, zx, zy, pou.center_x, pou.center_y, pou.half, pou.collar, m)
        live = np.flatnonzero(own > 0)
        fz = np.zeros(len(zx))
        if len(live):
            zi = np.column_stack([zx[live], zy[live]])
            fz[live] = f(zi, dist_to_boundary(domain, zi))
        vals = _mollify(ci, zx, zy, own, fz, wq, pou.center_x, pou.center_y, pou.half, pou.collar, nptr, nidx, m)
        out[a : a + chunk] = np.bincount(pi, vals, minlength=len(sub))
    return out


def p_eta(f, W: WhitneyDecomposition | PartitionOfUnity, spec: MollifierSpec, p) -> float:
    pou = W if isinstance(W, PartitionOfUnity) else PartitionOfUnity(W, spec.epsilon)
    pt = np.asarray(tuple(p), dtype=float).reshape(1, 2)
    return float(p_eta_values(f, pou, spec, pt)[0])


class MollifiedField(ScalarField):
    """``P^eta f`` as a field, evaluated on demand at quadrature nodes."""

    def __init__(self, f, W: WhitneyDecomposition, spec: MollifierSpec):
        self.f = as_field(f)
        self.spec = spec
        self.pou = PartitionOfUnity(W, spec.epsilon)

    def __call__(self, xy, d):
        return p_eta_values(self.f, self.pou, self.spec, xy)

    def __repr__(self):
        return f"P[{self.f!r}, delta={self.spec.delta!r}]"


# -- experiments ------------------------------------------------------------------

#: ``last <= VANISHING_RATIO * first`` counts as convergence to zero
VANISHING_RATIO = 0.2
_CASE_TOL = 1e-9


@dataclass(frozen=True)
class DensityRow:
    n: int
    seminorm: float
    lp_norm: float
    lemma_bound_term: float
    classification: str


def classify(params: SpaceParams, codim) -> str:
    """Regime of ``sp + alpha + beta`` against the boundary codimension.

    ``codim`` is a number or a ``(lower, upper)`` pair of Assouad bounds.
    """
    lo, hi = (codim, codim) if np.isscalar(codim) else (float(codim[0]), float(codim[1]))
    t = params.total_exponent
    if t < lo - _CASE_TOL:
        return "I: density holds"
    if t > hi + _CASE_TOL:
        return "III: density fails"
    if abs(t - lo) <= _CASE_TOL and abs(t - hi) <= _CASE_TOL:
        if params.p == 1.0:
            return "II exploratory: p = 1 boundary case is an open problem"
        return "II: density holds if the domain is homogeneous"
    return "undetermined: exponent between the codimension bounds"


def _cutoff_product(f: ScalarField, n: int) -> ScalarField:
    return f * CutoffVn(float(n))


def _layer(f: ScalarField, width: float) -> ScalarField:
    return FunctionField(lambda xy, d: f(xy, d) * (d <= width), f"({f!r} on d <= {width!r})")


def density_experiment(domain: Domain, params: SpaceParams, f=None, n_list=(4, 8, 16, 32, 64), W=None,
                       quad_order: int = 3, codim=None) -> list:
    """Convergence table for ``f v_n``: seminorm, L^p norm (p-th power) and
    the bound ``n^(sp) int_(d <= 3/n) |f|^p d^-(alpha+beta)``."""
    from .dimension import assouad_codim_bounds
    from .geometry import BoundarySampler

    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    f = as_field(1.0 if f is None else f)
    if codim is None:
        codim = assouad_codim_bounds(BoundarySampler.from_domain(domain))
    label = classify(params, codim)
    rows = []
    for n in n_list:
        g = _cutoff_product(f, n)
        semi = full_seminorm(g, domain, params, W=W, quad_order=quad_order).value
        lp = lp_norm(g, domain, 0.0, W, quad_order, p=params.p).value
        bound = n ** params.sp * lp_norm(_layer(f, 3.0 / n), domain, params.alpha + params.beta, W, quad_order,
                                         p=params.p).value
        rows.append(DensityRow(n, float(semi), float(lp), float(bound), label))
    return rows


def vanishing(trace) -> bool:
    t = np.asarray(trace, dtype=float)
    if np.all(t == 0):
        return True
    return bool(t[-1] <= VANISHING_RATIO * t[0])


@dataclass(frozen=True)
class CharacterizationReport:
    hardy_lhs: float
    lhs_finite: bool
    trace: tuple
    trace_vanishes: bool
    verdict: str
    n_list: tuple = field(default=())


def characterization_check(domain: Domain, params: SpaceParams, f, n_list=(4, 8, 16, 32, 64), W=None,
                           quad_order: int = 3) -> CharacterizationReport:
    """Compare finiteness of ``int |f|^p d^-(sp+alpha+beta)`` with ``[f v_n] -> 0``."""
    f = as_field(f)
    lhs = lp_norm(f, domain, params.total_exponent, W, quad_order, p=params.p)
    finite = not lhs.divergent and math.isfinite(lhs.value)
    trace = tuple(full_seminorm(_cutoff_product(f, n), domain, params, W=W, quad_order=quad_order).value
                  for n in n_list)
    vanishes = vanishing(trace)
    if finite == vanishes:
        verdict = "consistent: f ∈ W_0" if finite else "consistent: f ∉ W_0"
    else:
        verdict = "inconsistent: hardy integral finite" if finite else "inconsistent: hardy integral infinite"
    return CharacterizationReport(float(lhs.value), finite, trace, vanishes, verdict, tuple(int(n) for n in n_list))
