"""Planar polygonal domains with exact distance and membership queries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely

from . import _kernels
from .estimate import Estimate

# Irrational ray direction for point-in-polygon: generic w.r.t. any vertex.
_RAY_ANGLE = math.pi * (math.sqrt(2.0) - 1.0)
_RAY = (math.cos(_RAY_ANGLE), math.sin(_RAY_ANGLE))

MAX_KOCH_LEVEL = 8


class GeometryError(ValueError):
    """Invalid domain construction or query parameters."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, eq=False)
class Domain:
    """Bounded open region enclosed by a simple counterclockwise polygon.

    ``vertices`` is an ``(n, 2)`` array; ``segments`` holds the closed edge
    chain as ``(n, 4)`` rows ``x0, y0, x1, y1``.
    """

    kind: str
    vertices: np.ndarray
    bounding_box: tuple[float, float, float, float]
    diam: float
    area: float
    segments: np.ndarray = field(repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.segments)

    @property
    def perimeter(self) -> float:
        s = self.segments
        return float(np.hypot(s[:, 2] - s[:, 0], s[:, 3] - s[:, 1]).sum())

    def to_json(self) -> dict:
        return {"kind": self.kind, "vertices": self.vertices.tolist()}

    def boundary(self) -> "BoundarySampler":
        return BoundarySampler.from_domain(self)


def _as_xy(pts) -> np.ndarray:
    arr = np.array([tuple(p) for p in pts] if not isinstance(pts, np.ndarray) else pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError("expected a list of (x, y) points")
    return arr


def _diameter(v: np.ndarray) -> float:
    # Max pairwise distance is attained on the convex hull.
    hull = np.asarray(shapely.convex_hull(shapely.MultiPoint(v)).exterior.coords)[:-1]
    if len(hull) > 4000:
        hull = hull[np.linspace(0, len(hull) - 1, 4000).astype(int)]
    best = 0.0
    for i in range(len(hull)):
        d = np.hypot(*(hull[i + 1 :] - hull[i]).T)
        if d.size:
            best = max(best, float(d.max()))
    return best


def make_polygon(vertices, kind: str = "polygon") -> Domain:
    """Build a Domain from a simple counterclockwise vertex chain."""
    v = _as_xy(vertices)
    if len(v) < 3:
        raise GeometryError("a polygon needs at least 3 vertices")
    if not np.all(np.isfinite(v)):
        raise GeometryError("non-finite vertex coordinates")
    if np.allclose(v[0], v[-1]):
        v = v[:-1]
    x, y = v[:, 0], v[:, 1]
    if not shapely.LinearRing(v).is_simple:
        raise GeometryError("polygon boundary is self-intersecting")
    area = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    if not area > 0:
        if area < 0:
            raise GeometryError("vertices must be ordered counterclockwise")
        raise GeometryError("degenerate polygon with zero area")
    seg = np.hstack([v, np.roll(v, -1, axis=0)])
    bbox = (float(x.min()), float(y.min()), float(x.max()), float(y.max()))
    return Domain(kind, v, bbox, _diameter(v), area, np.ascontiguousarray(seg))


def koch_snowflake(level: int, side: float = 1.0) -> Domain:
    """Koch snowflake prefractal with ``3 * 4**level`` edges, bumps outward."""
    if level < 0 or level > MAX_KOCH_LEVEL:
        raise GeometryError(f"koch level must lie in [0, {MAX_KOCH_LEVEL}], got {level}")
    h = side * math.sqrt(3.0) / 2.0
    pts = np.array([[0.0, 0.0], [side, 0.0], [side / 2.0, h]])
    rot = np.array([[0.5, -math.sqrt(3.0) / 2.0], [math.sqrt(3.0) / 2.0, 0.5]])
    for _ in range(level):
        a = pts
        b = np.roll(pts, -1, axis=0)
        e = (b - a) / 3.0
        p1 = a + e
        p3 = a + 2.0 * e
        # Rotating by -60 degrees puts the apex outside a ccw polygon.
        p2 = p1 + e @ rot
        pts = np.stack([a, p1, p2, p3], axis=1).reshape(-1, 2)
    return make_polygon(pts, kind="koch-prefractal")


def domain_from_json(obj) -> Domain:
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    kind = obj.get("kind", "polygon")
    if kind not in ("polygon", "koch-prefractal"):
        raise GeometryError(f"unknown domain kind {kind!r}")
    return make_polygon(obj["vertices"], kind=kind)


def _xy_arrays(points):
    if isinstance(points, Point):
        return np.array([points.x]), np.array([points.y]), True
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        return arr[:1].copy(), arr[1:2].copy(), True
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1]), False


def dist_to_boundary(domain: Domain, points):
    """Exact Euclidean distance to the boundary polygon.

    Accepts a Point, an ``(x, y)`` pair or an ``(n, 2)`` array.
    """
    px, py, scalar = _xy_arrays(points)
    d = _kernels.points_to_segments(px, py, domain.segments)
    return float(d[0]) if scalar else d


def contains(domain: Domain, points):
    """Open-set membership: boundary points are reported as outside."""
    px, py, scalar = _xy_arrays(points)
    inside = _kernels.ray_crossings(px, py, domain.segments, _RAY[0], _RAY[1])
    on_edge = _kernels.points_to_segments(px, py, domain.segments) == 0.0
    inside &= ~on_edge
    return bool(inside[0]) if scalar else inside


@dataclass(frozen=True, eq=False)
class BoundarySampler:
    """The closed boundary chain of a domain as a list of segments."""

    segments: np.ndarray
    total_length: float
    _cum: np.ndarray = field(repr=False)

    @classmethod
    def from_segments(cls, segments) -> "BoundarySampler":
        seg = np.ascontiguousarray(np.asarray(segments, dtype=float).reshape(-1, 4))
        lengths = np.hypot(seg[:, 2] - seg[:, 0], seg[:, 3] - seg[:, 1])
        return cls(seg, float(lengths.sum()), np.concatenate([[0.0], np.cumsum(lengths)]))

    @classmethod
    def from_domain(cls, domain: Domain) -> "BoundarySampler":
        return cls.from_segments(domain.segments)

    @property
    def diam(self) -> float:
        pts = np.vstack([self.segments[:, :2], self.segments[:, 2:]])
        if len(pts) < 3:
            return float(np.hypot(*(pts.max(0) - pts.min(0))))
        try:
            return _diameter(pts)
        except Exception:
            return float(np.hypot(*(pts.max(0) - pts.min(0))))

    def distance(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return _kernels.points_to_segments(
            np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1]), self.segments
        )

    def sample_uniform(self, n: int) -> np.ndarray:
        """``n`` points equally spaced in arclength along the chain."""
        if self.total_length == 0.0:
            return np.repeat(self.segments[:1, :2], n, axis=0)
        t = (np.arange(n) + 0.5) * (self.total_length / n)
        return self.points_at(t)

    def sample_random(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.total_length == 0.0:
            return np.repeat(self.segments[:1, :2], n, axis=0)
        return self.points_at(rng.uniform(0.0, self.total_length, n))

    def points_at(self, arclength: np.ndarray) -> np.ndarray:
        k = np.clip(np.searchsorted(self._cum, arclength, side="right") - 1, 0, len(self.segments) - 1)
        seg = self.segments[k]
        length = self._cum[k + 1] - self._cum[k]
        frac = np.where(length > 0, (arclength - self._cum[k]) / np.where(length > 0, length, 1.0), 0.0)
        return seg[:, :2] + frac[:, None] * (seg[:, 2:] - seg[:, :2])


def _ball_samples(center, R, n, rng):
    r = R * np.sqrt(rng.uniform(0.0, 1.0, n))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack([center[0] + r * np.cos(phi), center[1] + r * np.sin(phi)])


def segments_near(segments: np.ndarray, center, radius: float) -> np.ndarray:
    """Segments meeting the closed ball ``B(center, radius)``."""
    c = np.asarray(tuple(center), dtype=float)
    a = segments[:, :2] - c
    e = segments[:, 2:] - segments[:, :2]
    ee = np.einsum("ij,ij->i", e, e)
    t = np.clip(-np.einsum("ij,ij->i", a, e) / np.where(ee > 0, ee, 1.0), 0.0, 1.0)
    q = a + t[:, None] * e
    return np.ascontiguousarray(segments[np.einsum("ij,ij->i", q, q) <= radius * radius])


def tubular_volume(boundary: BoundarySampler, center, r: float, R: float, mc_samples: int = 20000, seed: int = 0,
                   inside: Domain | None = None) -> Estimate:
    """Monte Carlo area of ``{y : dist(y, E) <= r}`` inside ``B(center, R)``.

    ``E`` is the boundary chain.  With ``inside`` set, only points of that
    domain count (the inner tubular neighbourhood).
    """
    if not (0 < r < R):
        raise GeometryError(f"need 0 < r < R, got r={r}, R={R}")
    rng = np.random.default_rng(seed)
    xy = _ball_samples(tuple(center), R, mc_samples, rng)
    seg = segments_near(boundary.segments, center, R + r)
    if len(seg) == 0:
        hit = np.zeros(len(xy), dtype=bool)
    else:
        hit = _kernels.within_distance(np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1]), seg, r)
    if inside is not None:
        hit &= contains(inside, xy)
    ball = math.pi * R * R
    frac = hit.mean()
    err = ball * math.sqrt(max(frac * (1 - frac), 0.0) / mc_samples)
    return Estimate(value=float(ball * frac), stderr=float(err))


def plumpness_estimate(domain: Domain, radii, trial_centers: int = 50, seed: int = 0, grid: int = 11) -> float:
    """Empirical kappa: min over sampled centers and radii of the largest
    relative inner-ball radius reachable inside ``B(x, r)``."""
    radii = [float(r) for r in radii]
    if any(not (0 < r < domain.diam) for r in radii):
        raise GeometryError("radii must lie in (0, diam)")
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = domain.bounding_box
    centers = []
    while len(centers) < trial_centers:
        cand = np.column_stack([rng.uniform(x0, x1, 4 * trial_centers), rng.uniform(y0, y1, 4 * trial_centers)])
        centers.extend(cand[contains(domain, cand)].tolist())
    centers = np.array(centers[:trial_centers])
    # Boundary points matter most: mix in vertices.
    k = min(trial_centers, len(domain.vertices))
    idx = rng.choice(len(domain.vertices), k, replace=False)
    centers = np.vstack([centers, domain.vertices[idx]])
    rad = np.linspace(0.0, 1.0, grid)[1:]
    ang = np.linspace(0.0, 2.0 * math.pi, 8 * grid, endpoint=False)
    rr, aa = np.meshgrid(rad, ang)
    off = np.vstack([[0.0, 0.0], np.column_stack([(rr * np.cos(aa)).ravel(), (rr * np.sin(aa)).ravel()])])
    best_all = 1.0
    for r in radii:
        for c in centers:
            z = c + r * off
            inside = contains(domain, z)
            if not inside.any():
                continue
            dz = dist_to_boundary(domain, z[inside])
            kappa = min(float(dz.max()) / r, 1.0)
            best_all = min(best_all, kappa)
    return max(best_all, np.finfo(float).tiny)
