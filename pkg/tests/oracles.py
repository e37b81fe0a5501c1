"""Reference computations that share no code with the package."""

import math

import networkx as nx
import numpy as np
from scipy import integrate


def square_distance_zeta(q: float) -> float:
    """``int d^-q`` over the unit square: the level set ``{d = t}`` has length ``4 (1 - 2t)``."""
    val, _ = integrate.quad(lambda t: 4.0 * (1.0 - 2.0 * t) * t ** (-q), 0.0, 0.5, limit=200)
    return val


def square_distance_zeta_closed(q: float) -> float:
    return 4.0 * (0.5 ** (1 - q) / (1 - q) - 2.0 * 0.5 ** (2 - q) / (2 - q))


def strip_disk_area(r: float, R: float) -> float:
    """Area of ``{|y| <= r} ∩ B(0, R)`` for ``r <= R``, i.e. both sides of a line through the centre."""
    return 2.0 * (r * math.sqrt(R * R - r * r) + R * R * math.asin(r / R))


def brute_boundary_distance(vertices, point, n: int = 1_000_000) -> float:
    """Minimum distance from ``point`` to ``n`` points spread evenly along the closed polygon."""
    v = np.asarray(vertices, dtype=float)
    w = np.roll(v, -1, axis=0)
    lengths = np.hypot(*(w - v).T)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    t = np.linspace(0.0, cum[-1], n, endpoint=False)
    k = np.searchsorted(cum, t, side="right") - 1
    u = (t - cum[k]) / lengths[k]
    pts = v[k] + u[:, None] * (w[k] - v[k])
    return float(np.min(np.hypot(pts[:, 0] - point[0], pts[:, 1] - point[1])))


def square_whitney_cubes(depth: int, base: float, origin):
    """Enumerate dyadic squares of the unit square with ``diam <= dist <= 4 diam``
    whose parents fail the test, by brute force over every level."""
    out = set()
    ox, oy = origin
    for level in range(depth + 1):
        h = base / 2**level
        n = 2**level
        for i in range(n):
            x0 = ox + i * h
            if x0 < 0 or x0 + h > 1:
                continue
            for j in range(n):
                y0 = oy + j * h
                if y0 < 0 or y0 + h > 1:
                    continue
                dist = min(x0, 1 - x0 - h, y0, 1 - y0 - h)
                if math.sqrt(2) * h <= dist <= 4 * math.sqrt(2) * h:
                    out.add((level, i, j))
    # keep maximal cubes only
    keep = set()
    for level, i, j in out:
        ancestors = [(level - m, i >> m, j >> m) for m in range(1, level + 1)]
        if not any(a in out for a in ancestors):
            keep.add((level, i, j))
    return keep


def covered_area(cubes, base: float) -> float:
    return sum((base / 2**level) ** 2 for level, _, _ in cubes)


def touching_graph(W, weight: str) -> nx.Graph:
    """Graph on cubes whose closed squares meet, built by a direct pairwise test."""
    G = nx.Graph()
    G.add_nodes_from(range(len(W)))
    x0, y0, s = W.x0, W.y0, W.side
    tol = 1e-12
    for i in range(len(W)):
        touch = ((x0 <= x0[i] + s[i] + tol) & (x0[i] <= x0 + s + tol)
                 & (y0 <= y0[i] + s[i] + tol) & (y0[i] <= y0 + s + tol))
        for j in np.flatnonzero(touch):
            if j > i:
                w = 1.0 if weight == "hops" else 0.5 * (s[i] + s[j])
                G.add_edge(i, int(j), weight=w)
    return G
