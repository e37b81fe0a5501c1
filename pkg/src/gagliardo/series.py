"""Limits and divergence tests for depth traces of partial integrals."""

from __future__ import annotations

import math

import numpy as np

#: increments must stop shrinking over this many consecutive depths
DIVERGENCE_RUN = 3
#: default bound on the ratio of consecutive increments
INCREMENT_THRESHOLD = 1.0
#: shortest trace with two Shanks transforms to compare
MIN_EXTRAPOLATION_POINTS = 5


def increments(trace) -> np.ndarray:
    t = np.asarray(trace, dtype=float)
    return np.diff(t)


def is_divergent(trace, threshold: float = INCREMENT_THRESHOLD, run: int = DIVERGENCE_RUN, mode: str = "increment") -> bool:
    """Flag a trace of nondecreasing partial integrals as divergent.

    ``mode="increment"`` requires the last ``run`` ratios of consecutive
    increments ``(T_k - T_{k-1}) / (T_{k-1} - T_{k-2})`` to be at least
    ``threshold``; increments that no longer shrink mean the partial sums
    grow at least linearly in depth.  ``mode="growth"`` instead requires the
    last ``run`` ratios ``T_k / T_{k-1}`` to reach ``threshold``.
    """
    t = np.asarray(trace, dtype=float)
    t = t[t > 0]
    if mode == "growth":
        if len(t) < run + 1:
            return False
        g = t[1:] / t[:-1]
        return bool(np.all(g[-run:] >= threshold))
    if mode != "increment":
        raise ValueError(f"unknown divergence mode {mode!r}")
    dlt = np.diff(t)
    if len(dlt) < run + 1:
        return False
    if np.any(dlt[-run - 1 :] <= 0):
        return False
    r = dlt[1:] / dlt[:-1]
    return bool(np.all(r[-run:] >= threshold))


def growth_factors(trace) -> np.ndarray:
    t = np.asarray(trace, dtype=float)
    t = t[t > 0]
    return t[1:] / t[:-1]


def wynn_epsilon(seq) -> list:
    """Even columns of Wynn's epsilon table; entry ``k`` of the result is the
    Shanks transform ``e_k`` evaluated on the last entries of ``seq``.

    ``e_k`` is exact for sequences whose error is a sum of ``k`` geometric
    terms.
    """
    s = [float(v) for v in seq]
    n = len(s)
    prev = [0.0] * (n + 1)
    cur = s[:]
    out = [cur[-1]]
    for col in range(1, n):
        nxt = []
        for i in range(len(cur) - 1):
            diff = cur[i + 1] - cur[i]
            # differences at roundoff level: the column has already converged
            if not math.isfinite(diff) or abs(diff) <= 1e-13 * max(abs(cur[i]), abs(cur[i + 1])):
                return out
            nxt.append(prev[i + 1] + 1.0 / diff)
        prev, cur = cur, nxt
        if col % 2 == 0:
            if not cur:
                break
            out.append(cur[-1])
    return out


def extrapolate(trace, max_terms: int = 7) -> tuple:
    """Limit estimate and error indicator for a convergent trace.

    Uses the highest Shanks transform available from the last ``max_terms``
    positive entries; falls back to the last entry when the trace is too
    short, the increments are not shrinking or the table degenerates.  The error indicator is the
    spread between the last two transforms (or the last increment).
    """
    t = np.asarray(trace, dtype=float)
    t = t[t > 0]
    if len(t) == 0:
        return 0.0, 0.0
    last = float(t[-1])
    if len(t) < 3:
        return last, (float(t[-1] - t[-2]) if len(t) == 2 else last)
    d = np.diff(t)
    # one transform alone cannot be checked against another
    if len(t) < MIN_EXTRAPOLATION_POINTS:
        return last, float(abs(d[-1]))
    if d[-1] <= 0 or d[-2] <= 0 or d[-1] >= d[-2]:
        return last, float(abs(d[-1]))
    cols = wynn_epsilon(t[-max_terms:])
    cols = [c for c in cols if math.isfinite(c) and c >= last]
    if len(cols) < 2:
        return last, float(abs(d[-1]))
    best = cols[-1]
    # A transform far beyond a geometric tail bound signals an unstable table.
    ratio = d[-1] / d[-2]
    tail = d[-1] * ratio / (1.0 - ratio)
    if best - last > 4.0 * tail + 1e-15 * abs(last):
        best = cols[1]
    return float(best), float(abs(best - cols[-2]) if len(cols) >= 2 else abs(d[-1]))
