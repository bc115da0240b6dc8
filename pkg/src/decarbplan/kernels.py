"""Numeric kernels with optional numba acceleration.

Set ``PLAN_DISABLE_NUMBA=1`` to force the pure-numpy implementations;
otherwise numba-compiled versions are used when numba imports cleanly.
"""

from __future__ import annotations

import os

import numpy as np


def numba_enabled() -> bool:
    if os.environ.get("PLAN_DISABLE_NUMBA", "").strip() in {"1", "true", "yes"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def extract_turning_points(series: np.ndarray) -> np.ndarray:
    """Strip monotone interior points, keeping local extrema and endpoints."""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        return series.copy()
    # collapse plateaus first so a flat top still registers as one extremum
    dedup = np.concatenate(([True], np.diff(series) != 0))
    s = series[dedup]
    if s.size < 3:
        return s
    d = np.diff(s)
    keep = np.ones(s.size, dtype=bool)
    keep[1:-1] = d[:-1] * d[1:] < 0
    return s[keep]


def _rainflow_py(points: np.ndarray) -> np.ndarray:
    """Four-point rainflow counting.  Returns (n, 2) rows of
    (range, count) with count 1.0 for full cycles and 0.5 for the
    residual half cycles."""
    n = points.shape[0]
    stack = np.empty(n, dtype=np.float64)
    top = 0
    out = np.empty((n, 2), dtype=np.float64)
    m = 0
    for i in range(n):
        stack[top] = points[i]
        top += 1
        while top >= 4:
            x1 = abs(stack[top - 3] - stack[top - 4])
            x2 = abs(stack[top - 2] - stack[top - 3])
            x3 = abs(stack[top - 1] - stack[top - 2])
            if x2 <= x1 and x2 <= x3:
                out[m, 0] = x2
                out[m, 1] = 1.0
                m += 1
                stack[top - 3] = stack[top - 1]
                top -= 2
            else:
                break
    for i in range(top - 1):
        out[m, 0] = abs(stack[i + 1] - stack[i])
        out[m, 1] = 0.5
        m += 1
    return out[:m]


if numba_enabled():
    from numba import njit

    _rainflow_jit = njit(cache=True)(_rainflow_py)

    def rainflow_cycles(series: np.ndarray) -> np.ndarray:
        points = extract_turning_points(series)
        if points.size < 2:
            return np.empty((0, 2))
        return _rainflow_jit(np.ascontiguousarray(points))
else:
    def rainflow_cycles(series: np.ndarray) -> np.ndarray:
        points = extract_turning_points(series)
        if points.size < 2:
            return np.empty((0, 2))
        return _rainflow_py(points)


def rainflow_cycles_reference(series: np.ndarray) -> np.ndarray:
    """Always-interpreted variant, kept for cross-checking the jit path."""
    points = extract_turning_points(series)
    if points.size < 2:
        return np.empty((0, 2))
    return _rainflow_py(points)


def depth_weighted_throughput(series: np.ndarray, exponent: float) -> float:
    """Sum of count * depth^exponent over rainflow cycles of a normalized
    state-of-charge series."""
    cycles = rainflow_cycles(series)
    if cycles.size == 0:
        return 0.0
    return float(np.sum(cycles[:, 1] * cycles[:, 0] ** exponent))
