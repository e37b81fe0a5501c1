"""Dyadic Whitney decomposition (constant 1) with neighbour graph, shadows,
long distances and chains."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from . import _kernels
from .geometry import Domain, contains

SQRT2 = math.sqrt(2.0)
EPSILON = 0.1  # blow-up factor of Q* is 1 + EPSILON; (1 + EPSILON)^2 < 5/4
_KEY_SHIFT = 24


class DecompositionError(RuntimeError):
    pass


class ChainError(RuntimeError):
    pass


@dataclass(frozen=True)
class DyadicCube:
    """Closed dyadic square ``origin + [ix, ix+1] x [iy, iy+1] * side``."""

    level: int
    ix: int
    iy: int
    base: float = 1.0
    origin: tuple = (0.0, 0.0)

    @property
    def side(self) -> float:
        return self.base * 2.0 ** (-self.level)

    @property
    def corner(self) -> tuple:
        h = self.side
        return (self.origin[0] + self.ix * h, self.origin[1] + self.iy * h)

    @property
    def center(self) -> tuple:
        x0, y0 = self.corner
        h = self.side
        return (x0 + h / 2.0, y0 + h / 2.0)

    @property
    def diam(self) -> float:
        return SQRT2 * self.side

    def bounds(self) -> tuple:
        x0, y0 = self.corner
        h = self.side
        return (x0, y0, x0 + h, y0 + h)


def box_distance(a, b) -> float:
    """Euclidean distance between two closed axis-aligned boxes."""
    dx = max(a[0] - b[2], b[0] - a[2], 0.0)
    dy = max(a[1] - b[3], b[1] - a[3], 0.0)
    return math.hypot(dx, dy)


def long_distance(Q: DyadicCube, S: DyadicCube) -> float:
    """``l(Q) + dist(Q, S) + l(S)``."""
    return Q.side + box_distance(Q.bounds(), S.bounds()) + S.side


@dataclass(frozen=True)
class Chain:
    cubes: tuple
    central_index: int


@dataclass(frozen=True, eq=False)
class WhitneyDecomposition:
    """Whitney cubes stored column-wise.

    Cubes are sorted by ``(level, ix, iy)``.  ``dist`` holds the exact
    distance from each closed cube to the boundary.  Cubes of level at most
    ``k`` form exactly the decomposition a build with ``max_depth = k``
    would return, which :meth:`truncate` exploits.
    """

    domain: Domain
    max_depth: int
    base: float
    origin: tuple
    level: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    dist: np.ndarray
    discarded_volume: float = 0.0
    _nbr: tuple = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.level)

    @cached_property
    def side(self) -> np.ndarray:
        return self.base * np.exp2(-self.level.astype(float))

    @cached_property
    def x0(self) -> np.ndarray:
        return self.origin[0] + self.ix * self.side

    @cached_property
    def y0(self) -> np.ndarray:
        return self.origin[1] + self.iy * self.side

    @cached_property
    def centers(self) -> np.ndarray:
        h = self.side / 2.0
        return np.column_stack([self.x0 + h, self.y0 + h])

    @property
    def covered_volume(self) -> float:
        return float(np.sum(self.side**2))

    @property
    def cubes(self) -> list:
        return [self.cube(i) for i in range(len(self))]

    def cube(self, i: int) -> DyadicCube:
        return DyadicCube(int(self.level[i]), int(self.ix[i]), int(self.iy[i]), self.base, self.origin)

    def bounds(self, i: int) -> tuple:
        return (self.x0[i], self.y0[i], self.x0[i] + self.side[i], self.y0[i] + self.side[i])

    def index_of(self, Q: DyadicCube) -> int:
        hit = np.flatnonzero((self.level == Q.level) & (self.ix == Q.ix) & (self.iy == Q.iy))
        if hit.size == 0:
            raise KeyError(f"cube {Q} is not part of the decomposition")
        return int(hit[0])

    # -- neighbour graph -------------------------------------------------

    @property
    def neighbor_graph(self) -> tuple:
        """CSR ``(indptr, indices)`` of cubes whose closures intersect."""
        if self._nbr is None:
            object.__setattr__(self, "_nbr", _neighbors(self.level, self.ix, self.iy))
        return self._nbr

    def neighbors(self, i: int) -> np.ndarray:
        ptr, idx = self.neighbor_graph
        return idx[ptr[i] : ptr[i + 1]]

    def neighbor_pairs(self) -> np.ndarray:
        """Unordered touching pairs ``(i, j)`` with ``i < j``."""
        ptr, idx = self.neighbor_graph
        rows = np.repeat(np.arange(len(self)), np.diff(ptr))
        keep = rows < idx
        return np.column_stack([rows[keep], idx[keep]])

    # -- derived decompositions -----------------------------------------

    def truncate(self, depth: int) -> "WhitneyDecomposition":
        keep = self.level <= depth
        if not keep.any():
            raise DecompositionError(f"no cube accepted up to depth {depth}")
        return WhitneyDecomposition(
            self.domain, depth, self.base, self.origin,
            self.level[keep], self.ix[keep], self.iy[keep], self.dist[keep],
        )

    # -- export -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "origin": list(self.origin),
            "max_depth": self.max_depth,
            "cubes": [{"level": int(k), "ix": int(a), "iy": int(b)} for k, a, b in zip(self.level, self.ix, self.iy)],
        }

    def to_svg(self, highlight=(), chain=None, size: int = 800) -> str:
        x0, y0, x1, y1 = self.domain.bounding_box
        span = max(x1 - x0, y1 - y0)
        pad = 0.02 * span
        sc = size / (span + 2 * pad)

        def tx(x):
            return (x - x0 + pad) * sc

        def ty(y):
            return size - (y - y0 + pad) * sc

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
        pts = " ".join(f"{tx(x):.3f},{ty(y):.3f}" for x, y in self.domain.vertices)
        out.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1"/>')
        lmin, lmax = int(self.level.min()), int(self.level.max())
        hl = set(int(h) for h in highlight)
        for i in range(len(self)):
            t = 0.0 if lmax == lmin else (self.level[i] - lmin) / (lmax - lmin)
            color = f"rgb({int(40 + 200 * t)},{int(120 + 60 * (1 - t))},{int(230 - 180 * t)})"
            if i in hl:
                color = "rgb(250,200,0)"
            h = self.side[i] * sc
            out.append(
                f'<rect x="{tx(self.x0[i]):.3f}" y="{ty(self.y0[i] + self.side[i]):.3f}" '
                f'width="{h:.3f}" height="{h:.3f}" fill="{color}" stroke="white" stroke-width="0.3"/>'
            )
        if chain is not None:
            pts = " ".join(f"{tx(self.centers[c, 0]):.3f},{ty(self.centers[c, 1]):.3f}" for c in chain.cubes)
            out.append(f'<polyline points="{pts}" fill="none" stroke="red" stroke-width="2"/>')
        out.append("</svg>")
        return "\n".join(out)


def _root(domain: Domain) -> tuple:
    xmin, ymin, xmax, ymax = domain.bounding_box
    # pad the bounding box to a square; keeps axis-parallel edges on grid lines
    return max(xmax - xmin, ymax - ymin), (xmin, ymin)


def decompose(domain: Domain, max_depth: int) -> WhitneyDecomposition:
    """Recursive dyadic Whitney construction with constant 1.

    A closed cube is accepted when ``diam Q <= dist(Q, boundary) <= 4 diam Q``
    and its interior lies in the domain.  Cubes meeting the boundary or
    lying too close are split, cubes outside are dropped, and cubes still
    undecided at ``max_depth`` are dropped and counted in
    ``discarded_volume``.
    """
    if max_depth < 2:
        raise ValueError("max_depth must be at least 2")
    base, origin = _root(domain)
    seg = domain.segments
    ix = np.zeros(1, dtype=np.int64)
    iy = np.zeros(1, dtype=np.int64)
    acc = [], [], [], []
    discarded = 0.0
    for k in range(max_depth + 1):
        if ix.size == 0:
            break
        h = base * 2.0**-k
        x0 = origin[0] + ix * h
        y0 = origin[1] + iy * h
        d = _kernels.boxes_to_segments(x0, y0, x0 + h, y0 + h, seg)
        diam = SQRT2 * h
        free = d > 0.0
        inside = np.zeros(ix.size, dtype=bool)
        if free.any():
            inside[free] = contains(domain, np.column_stack([x0[free] + h / 2, y0[free] + h / 2]))
        ok = inside & (d >= diam) & (d <= 4.0 * diam)
        split = (~free) | (inside & ~ok)
        if ok.any():
            for lst, arr in zip(acc, (np.full(ok.sum(), k), ix[ok], iy[ok], d[ok])):
                lst.append(arr)
        if k == max_depth:
            # only the interior part of undecided cubes is lost coverage
            discarded = float(np.sum(inside & ~ok)) * h * h
            break
        ix = np.concatenate([2 * ix[split] + a for a in (0, 1, 0, 1)])
        iy = np.concatenate([2 * iy[split] + b for b in (0, 0, 1, 1)])
        order = np.lexsort((iy, ix))
        ix, iy = ix[order], iy[order]
    if not acc[0]:
        raise DecompositionError(f"no Whitney cube accepted up to depth {max_depth}")
    level, cix, ciy, cd = (np.concatenate(a) for a in acc)
    return WhitneyDecomposition(domain, max_depth, base, origin, level.astype(np.int64), cix, ciy, cd, discarded)


def from_cubes(domain: Domain, cubes, base: float, origin: tuple) -> WhitneyDecomposition:
    """Wrap an arbitrary family of dyadic cubes, e.g. a uniform grid used in
    synthetic tests.  No Whitney property is enforced."""
    arr = np.array([(c[0], c[1], c[2]) for c in cubes], dtype=np.int64).reshape(-1, 3)
    order = np.lexsort((arr[:, 2], arr[:, 1], arr[:, 0]))
    arr = arr[order]
    h = base * np.exp2(-arr[:, 0].astype(float))
    x0 = origin[0] + arr[:, 1] * h
    y0 = origin[1] + arr[:, 2] * h
    d = _kernels.boxes_to_segments(x0, y0, x0 + h, y0 + h, domain.segments)
    return WhitneyDecomposition(domain, int(arr[:, 0].max()), base, tuple(origin), arr[:, 0], arr[:, 1], arr[:, 2], d)


def _neighbors(level, ix, iy):
    n = len(level)
    K = int(level.max())
    scale = np.left_shift(1, K - level)
    a0, a1 = ix * scale, (ix + 1) * scale
    b0, b1 = iy * scale, (iy + 1) * scale
    keys = (level << (2 * _KEY_SHIFT)) | (ix << _KEY_SHIFT) | iy
    order = np.argsort(keys)
    skeys = keys[order]
    rows, cols = [], []
    for j in range(int(level.min()), K + 1):
        sel = np.flatnonzero(level >= j)
        m = 1 << (K - j)
        lo_x = -((-a0[sel]) // m) - 1
        lo_y = -((-b0[sel]) // m) - 1
        hi_x = a1[sel] // m
        hi_y = b1[sel] // m
        for dx in range(3):
            cx = lo_x + dx
            okx = cx <= hi_x
            for dy in range(3):
                cy = lo_y + dy
                ok = okx & (cy <= hi_y) & (cx >= 0) & (cy >= 0)
                q = (np.int64(j) << (2 * _KEY_SHIFT)) | (cx << _KEY_SHIFT) | cy
                pos = np.clip(np.searchsorted(skeys, q), 0, n - 1)
                hit = ok & (skeys[pos] == q)
                src = sel[hit]
                dst = order[pos[hit]]
                keep = src != dst
                rows.append(src[keep])
                cols.append(dst[keep])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    # symmetrize: the search only found neighbours at least as large
    r, c = np.concatenate([r, c]), np.concatenate([c, r])
    pair = np.unique(r * n + c)
    r, c = pair // n, pair % n
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, r + 1, 1)
    return np.cumsum(ptr), c.astype(np.int64)


def whitney_violations(W: WhitneyDecomposition) -> np.ndarray:
    """Indices of cubes breaking ``diam <= dist <= 4 diam`` (exact recheck)."""
    h = W.side
    d = _kernels.boxes_to_segments(W.x0, W.y0, W.x0 + h, W.y0 + h, W.domain.segments)
    diam = SQRT2 * h
    return np.flatnonzero((d < diam) | (d > 4.0 * diam))


def shadow(W: WhitneyDecomposition, Q, rho: float) -> np.ndarray:
    """Indices of cubes contained in the open ball ``B(x_Q, rho * l(Q))``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    Q = W.cube(Q) if isinstance(Q, (int, np.integer)) else Q
    cx, cy = Q.center
    R = rho * Q.side
    h = W.side
    fx = np.maximum(np.abs(W.x0 - cx), np.abs(W.x0 + h - cx))
    fy = np.maximum(np.abs(W.y0 - cy), np.abs(W.y0 + h - cy))
    return np.flatnonzero(np.hypot(fx, fy) < R)


def _graph(W: WhitneyDecomposition, weight: str = "hops") -> csr_matrix:
    """Neighbour graph weighted by the side of the destination cube
    (``"side"``) or by hop count with side length as a tie-breaker
    (``"hops"``, a discrete quasi-hyperbolic distance)."""
    ptr, idx = W.neighbor_graph
    if weight == "side":
        data = W.side[idx]
    elif weight == "hops":
        data = 1.0 + 1e-6 * W.side[idx] / W.base
    else:
        raise ValueError(f"unknown chain weight {weight!r}")
    return csr_matrix((data, idx, ptr), shape=(len(W), len(W)))


def chain(W: WhitneyDecomposition, Q, S, weight: str = "hops") -> Chain:
    """Shortest chain of touching cubes between ``Q`` and ``S``.

    ``weight="hops"`` minimises the number of cubes, which follows
    quasi-hyperbolic geodesics and yields admissible chains on uniform
    domains.  ``weight="side"`` minimises the total side length instead; such
    paths hug the boundary and their admissibility constant degrades with
    depth.  The central cube is the largest cube on the path.
    """
    q = Q if isinstance(Q, (int, np.integer)) else W.index_of(Q)
    s = S if isinstance(S, (int, np.integer)) else W.index_of(S)
    if q == s:
        return Chain((int(q),), 0)
    _, pred = dijkstra(_graph(W, weight), indices=int(q), return_predecessors=True)
    if pred[s] < 0:
        raise ChainError(f"cubes {q} and {s} are not connected in the neighbour graph")
    path = [int(s)]
    while path[-1] != q:
        path.append(int(pred[path[-1]]))
    path.reverse()
    central = int(np.argmax(W.side[path]))
    return Chain(tuple(path), central)


def _cube_dist(W, i, j) -> float:
    return box_distance(W.bounds(i), W.bounds(j))


def chain_admissibility(W: WhitneyDecomposition, c: Chain) -> float:
    """Largest ``a`` for which the chain satisfies both admissibility
    conditions, maximised over the choice of central cube."""
    path = c.cubes
    first, last = path[0], path[-1]
    side = W.side[list(path)]

    def D(i, j):
        return W.side[i] + _cube_dist(W, i, j) + W.side[j]

    a_len = D(first, last) / side.sum()
    to_first = np.array([side[t] / D(first, path[t]) for t in range(len(path))])
    to_last = np.array([side[t] / D(path[t], last) for t in range(len(path))])
    # best central index: max over i0 of min(prefix min of to_first, suffix min of to_last)
    pre = np.minimum.accumulate(to_first)
    suf = np.minimum.accumulate(to_last[::-1])[::-1]
    return float(min(a_len, np.max(np.minimum(pre, suf))))


def admissibility_constant(W: WhitneyDecomposition, sample_pairs: int = 200, seed: int = 0, weight: str = "hops") -> float:
    """Minimum over sampled cube pairs of :func:`chain_admissibility`.

    A one-cube decomposition only has the trivial chain, whose constant is
    ``l / (2 l) = 1/2``; that value is returned as the sentinel.
    """
    n = len(W)
    if n == 1:
        return 0.5
    rng = np.random.default_rng(seed)
    G = _graph(W, weight)
    a = math.inf
    firsts = rng.integers(0, n, sample_pairs)
    lasts = rng.integers(0, n, sample_pairs)
    for src in np.unique(firsts):
        _, pred = dijkstra(G, indices=int(src), return_predecessors=True)
        for dst in lasts[firsts == src]:
            if dst == src:
                a = min(a, 0.5)
                continue
            if pred[dst] < 0:
                raise ChainError(f"cubes {src} and {dst} are not connected")
            path = [int(dst)]
            while path[-1] != src:
                path.append(int(pred[path[-1]]))
            path.reverse()
            a = min(a, chain_admissibility(W, Chain(tuple(path), int(np.argmax(W.side[path])))))
    return float(a)


def blowup(W: WhitneyDecomposition, times: int = 1) -> np.ndarray:
    """Bounds ``(n, 4)`` of the cubes dilated ``(1 + EPSILON)**times`` about
    their centres."""
    h = W.side * (1.0 + EPSILON) ** times / 2.0
    c = W.centers
    return np.column_stack([c[:, 0] - h, c[:, 1] - h, c[:, 0] + h, c[:, 1] + h])


def max_overlap(W: WhitneyDecomposition, points: np.ndarray, times: int = 2) -> int:
    """Largest number of dilated cubes Q** containing any of the points."""
    b = blowup(W, times)
    best = 0
    for chunk in np.array_split(points, max(1, len(points) // 2000)):
        inside = (
            (chunk[:, None, 0] >= b[None, :, 0]) & (chunk[:, None, 0] <= b[None, :, 2])
            & (chunk[:, None, 1] >= b[None, :, 1]) & (chunk[:, None, 1] <= b[None, :, 3])
        )
        best = max(best, int(inside.sum(axis=1).max()))
    return best


def five_q_rho(W: WhitneyDecomposition, i: int, samples: int = 400, seed: int = 0) -> float:
    """Smallest ``rho`` such that the sampled part of ``5Q`` inside the
    domain is covered by the cubes of the shadow ``Sh_rho(Q)``."""
    rng = np.random.default_rng(seed)
    cx, cy = W.centers[i]
    h = W.side[i]
    pts = np.column_stack([cx + 2.5 * h * rng.uniform(-1, 1, samples), cy + 2.5 * h * rng.uniform(-1, 1, samples)])
    pts = pts[contains(W.domain, pts)]
    # far corner of every cube, relative to the centre of Q, in units of l(Q)
    fx = np.maximum(np.abs(W.x0 - cx), np.abs(W.x0 + W.side - cx))
    fy = np.maximum(np.abs(W.y0 - cy), np.abs(W.y0 + W.side - cy))
    reach = np.hypot(fx, fy) / h
    owner = locate(W, pts)
    if np.any(owner < 0):
        # part of 5Q is not covered at this depth: only the covered part counts
        owner = owner[owner >= 0]
    if owner.size == 0:
        return 0.0
    return float(reach[owner].max()) * (1.0 + 1e-12)


def chain_shadow_rho(W: WhitneyDecomposition, c: Chain) -> float:
    """Smallest ``rho`` with ``Q in Sh_rho(P)`` for every ``P`` on ``[Q, Q_S]``."""
    q = c.cubes[0]
    best = 0.0
    for t in range(c.central_index + 1):
        P = c.cubes[t]
        cx, cy = W.centers[P]
        fx = max(abs(W.x0[q] - cx), abs(W.x0[q] + W.side[q] - cx))
        fy = max(abs(W.y0[q] - cy), abs(W.y0[q] + W.side[q] - cy))
        best = max(best, math.hypot(fx, fy) / W.side[P])
    return best * (1.0 + 1e-12)


def measured_rho(W: WhitneyDecomposition, sample_cubes: int = 50, sample_pairs: int = 100, seed: int = 0, weight: str = "hops") -> float:
    """Empirical shadow radius covering both the 5Q property and the chain
    property over sampled cubes and pairs."""
    rng = np.random.default_rng(seed)
    n = len(W)
    rho = 1.0
    for i in rng.choice(n, min(sample_cubes, n), replace=False):
        rho = max(rho, five_q_rho(W, int(i), seed=seed))
    for _ in range(sample_pairs):
        q, s = rng.integers(0, n, 2)
        rho = max(rho, chain_shadow_rho(W, chain(W, int(q), int(s), weight)))
    return rho


def locate(W: WhitneyDecomposition, points: np.ndarray) -> np.ndarray:
    """Index of a cube containing each point (``-1`` if uncovered).

    Points on shared faces go to the cube with the lexicographically
    smallest key.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.full(len(points), -1, dtype=np.int64)
    keys = (W.level << (2 * _KEY_SHIFT)) | (W.ix << _KEY_SHIFT) | W.iy
    order = np.argsort(keys)
    skeys = keys[order]
    for k in np.unique(W.level):
        h = W.base * 2.0 ** (-int(k))
        gx = np.floor((points[:, 0] - W.origin[0]) / h).astype(np.int64)
        gy = np.floor((points[:, 1] - W.origin[1]) / h).astype(np.int64)
        q = (np.int64(k) << (2 * _KEY_SHIFT)) | (gx << _KEY_SHIFT) | gy
        pos = np.clip(np.searchsorted(skeys, q), 0, len(skeys) - 1)
        hit = (skeys[pos] == q) & (out < 0) & (gx >= 0) & (gy >= 0)
        out[hit] = order[pos[hit]]
    return out
