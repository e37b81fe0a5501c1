"""Compiled inner loops shared by the geometry and quadrature code.

Everything here works on plain float64 arrays.  Parallel loops write one
output slot per outer index and never reduce across threads, so results do
not depend on the thread count.
"""

import math

import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _point_segment_dist2(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    wx = px - ax
    wy = py - ay
    ee = ex * ex + ey * ey
    t = 0.0
    if ee > 0.0:
        t = (wx * ex + wy * ey) / ee
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    dx = wx - t * ex
    dy = wy - t * ey
    return dx * dx + dy * dy


@njit(cache=True, parallel=True)
def points_to_segments(px, py, seg):
    """Distance from each point to the nearest of the segments (m, 4)."""
    n = px.shape[0]
    m = seg.shape[0]
    out = np.empty(n)
    for i in prange(n):
        best = np.inf
        for k in range(m):
            d2 = _point_segment_dist2(px[i], py[i], seg[k, 0], seg[k, 1], seg[k, 2], seg[k, 3])
            if d2 < best:
                best = d2
        out[i] = math.sqrt(best)
    return out


@njit(cache=True, parallel=True)
def points_to_segments_owned(px, py, owner, cand_ptr, cand_idx, seg):
    """Like :func:`points_to_segments` but only scans the candidate edges
    registered for the cube that owns each point."""
    n = px.shape[0]
    out = np.empty(n)
    for i in prange(n):
        c = owner[i]
        best = np.inf
        for t in range(cand_ptr[c], cand_ptr[c + 1]):
            k = cand_idx[t]
            d2 = _point_segment_dist2(px[i], py[i], seg[k, 0], seg[k, 1], seg[k, 2], seg[k, 3])
            if d2 < best:
                best = d2
        out[i] = math.sqrt(best)
    return out


@njit(cache=True, parallel=True)
def ray_crossings(px, py, seg, ux, uy):
    """Parity of crossings of the ray p + t*u (t > 0) with the segments."""
    n = px.shape[0]
    m = seg.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for i in prange(n):
        inside = False
        for k in range(m):
            ax = seg[k, 0] - px[i]
            ay = seg[k, 1] - py[i]
            ex = seg[k, 2] - seg[k, 0]
            ey = seg[k, 3] - seg[k, 1]
            # solve t*u = a + w*e
            den = ux * ey - uy * ex
            if den == 0.0:
                continue
            t = (ax * ey - ay * ex) / den
            w = (ax * uy - ay * ux) / den
            if t > 0.0 and 0.0 <= w < 1.0:
                inside = not inside
        out[i] = inside
    return out


@njit(cache=True, inline="always")
def _segment_box_dist2(ax, ay, bx, by, x0, y0, x1, y1):
    # Liang-Barsky: does the segment meet the closed box?
    dx = bx - ax
    dy = by - ay
    t0 = 0.0
    t1 = 1.0
    hit = True
    for side in range(4):
        if side == 0:
            pp = -dx
            qq = ax - x0
        elif side == 1:
            pp = dx
            qq = x1 - ax
        elif side == 2:
            pp = -dy
            qq = ay - y0
        else:
            pp = dy
            qq = y1 - ay
        if pp == 0.0:
            if qq < 0.0:
                hit = False
                break
        else:
            r = qq / pp
            if pp < 0.0:
                if r > t1:
                    hit = False
                    break
                if r > t0:
                    t0 = r
            else:
                if r < t0:
                    hit = False
                    break
                if r < t1:
                    t1 = r
    if hit:
        return 0.0
    best = np.inf
    # segment endpoints to the box
    for e in range(2):
        qx = ax if e == 0 else bx
        qy = ay if e == 0 else by
        cx = min(max(qx, x0), x1)
        cy = min(max(qy, y0), y1)
        d2 = (qx - cx) ** 2 + (qy - cy) ** 2
        if d2 < best:
            best = d2
    # box corners to the segment
    for c in range(4):
        qx = x0 if (c == 0 or c == 3) else x1
        qy = y0 if c < 2 else y1
        d2 = _point_segment_dist2(qx, qy, ax, ay, bx, by)
        if d2 < best:
            best = d2
    return best


@njit(cache=True, parallel=True)
def boxes_to_segments(x0, y0, x1, y1, seg):
    """Exact distance from each closed axis-aligned box to the segment set."""
    n = x0.shape[0]
    m = seg.shape[0]
    out = np.empty(n)
    for i in prange(n):
        best = np.inf
        for k in range(m):
            d2 = _segment_box_dist2(seg[k, 0], seg[k, 1], seg[k, 2], seg[k, 3], x0[i], y0[i], x1[i], y1[i])
            if d2 < best:
                best = d2
                if best == 0.0:
                    break
        out[i] = math.sqrt(best)
    return out


@njit(cache=True)
def candidate_edges(x0, y0, x1, y1, reach, seg):
    """CSR lists of the segments lying within ``reach[i]`` of box ``i``."""
    n = x0.shape[0]
    m = seg.shape[0]
    counts = np.zeros(n + 1, dtype=np.int64)
    buf = [np.int64(0) for _ in range(0)]
    for i in range(n):
        r2 = reach[i] * reach[i]
        for k in range(m):
            d2 = _segment_box_dist2(seg[k, 0], seg[k, 1], seg[k, 2], seg[k, 3], x0[i], y0[i], x1[i], y1[i])
            if d2 <= r2:
                buf.append(k)
                counts[i + 1] += 1
    ptr = np.cumsum(counts)
    idx = np.empty(len(buf), dtype=np.int64)
    for t in range(len(buf)):
        idx[t] = buf[t]
    return ptr, idx


@njit(cache=True, inline="always")
def _order_level(t, thr):
    for k in range(thr.shape[0]):
        if t >= thr[k]:
            return k
    return thr.shape[0]


@njit(cache=True, parallel=True)
def far_pairs(ia0, ia1, ib0, ib1, x0, y0, side, reach, bins, nbins,
              ptr, X, Y, F, W, V, U, D, thr, sp, p, theta):
    """Sum the seminorm kernel over all non-touching unordered cube pairs.

    For cube ``i`` the nodes of refinement level ``k`` are
    ``ptr[k, i]:ptr[k, i + 1]``; the level is picked per cube from the ratio
    of the pair gap to its own side.  ``V`` and ``U`` are the x- and
    y-weights at each node.  Returns per-row, per-depth-bin sums for the
    full integral, the truncated one (``|x - y| < theta d(x)``) and the
    truncated one with the symmetrized weight.
    """
    n = ia0.shape[0]
    full = np.zeros((n, nbins))
    trunc = np.zeros((n, nbins))
    tsym = np.zeros((n, nbins))
    h = -(2.0 + sp) / 2.0
    th2 = theta * theta
    for i in prange(n):
        for j in range(i + 1, n):
            # closed dyadic boxes touch iff integer intervals overlap
            if ia0[j] <= ia1[i] and ia0[i] <= ia1[j] and ib0[j] <= ib1[i] and ib0[i] <= ib1[j]:
                continue
            gx = max(x0[i] - x0[j] - side[j], x0[j] - x0[i] - side[i], 0.0)
            gy = max(y0[i] - y0[j] - side[j], y0[j] - y0[i] - side[i], 0.0)
            gap = math.sqrt(gx * gx + gy * gy)
            li = _order_level(gap / side[i], thr)
            lj = _order_level(gap / side[j], thr)
            need_t = gap < theta * max(reach[i], reach[j])
            sf = 0.0
            st = 0.0
            ss = 0.0
            for a in range(ptr[li, i], ptr[li, i + 1]):
                xa = X[a]
                ya = Y[a]
                fa = F[a]
                wa = W[a]
                va = V[a]
                ua = U[a]
                da2 = th2 * D[a] * D[a]
                for b in range(ptr[lj, j], ptr[lj, j + 1]):
                    df = abs(fa - F[b])
                    if df == 0.0:
                        continue
                    dx = xa - X[b]
                    dy = ya - Y[b]
                    r2 = dx * dx + dy * dy
                    if p == 2.0:
                        g = df * df
                    elif p == 1.0:
                        g = df
                    else:
                        g = df ** p
                    k = wa * W[b] * g * r2 ** h
                    p1 = va * U[b]
                    p2 = V[b] * ua
                    sf += k * (p1 + p2)
                    if need_t:
                        i1 = r2 < da2
                        i2 = r2 < th2 * D[b] * D[b]
                        if i1:
                            st += k * p1
                        if i2:
                            st += k * p2
                        if i1 or i2:
                            ss += k * (p1 + p2) * ((1.0 if i1 else 0.0) + (1.0 if i2 else 0.0))
            bb = max(bins[i], bins[j])
            full[i, bb] += sf
            trunc[i, bb] += st
            tsym[i, bb] += ss
    return full, trunc, tsym


@njit(cache=True, parallel=True)
def within_distance(px, py, seg, r):
    """``dist(p_i, segments) <= r`` with early exit on the first close edge."""
    n = px.shape[0]
    m = seg.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    r2 = r * r
    for i in prange(n):
        for k in range(m):
            if _point_segment_dist2(px[i], py[i], seg[k, 0], seg[k, 1], seg[k, 2], seg[k, 3]) <= r2:
                out[i] = True
                break
    return out


@njit(cache=True, parallel=True)
def chord_lengths(px, py, seg, r):
    """Total length of the segments inside the closed disk ``B(p_i, r)``."""
    n = px.shape[0]
    m = seg.shape[0]
    out = np.zeros(n)
    r2 = r * r
    for i in prange(n):
        acc = 0.0
        for k in range(m):
            ax = seg[k, 0] - px[i]
            ay = seg[k, 1] - py[i]
            ex = seg[k, 2] - seg[k, 0]
            ey = seg[k, 3] - seg[k, 1]
            if min(ax, ax + ex) > r or max(ax, ax + ex) < -r or min(ay, ay + ey) > r or max(ay, ay + ey) < -r:
                continue
            ee = ex * ex + ey * ey
            if ee == 0.0:
                continue
            b = ax * ex + ay * ey
            c = ax * ax + ay * ay - r2
            disc = b * b - ee * c
            if disc <= 0.0:
                continue
            sq = np.sqrt(disc)
            t0 = max((-b - sq) / ee, 0.0)
            t1 = min((-b + sq) / ee, 1.0)
            if t1 > t0:
                acc += (t1 - t0) * np.sqrt(ee)
        out[i] = acc
    return out
