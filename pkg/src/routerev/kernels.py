"""Quadratic polyline kernels: Hausdorff, discrete Fréchet, tolerance edit distance.

Inputs are ``(n, 2)`` float arrays of ``[lat, lon]`` in degrees. Each kernel
exists twice, a numba version and a pure-numpy version; the public names
dispatch on :data:`BACKEND`. Both are importable directly so they can be
cross-checked.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit
from .geo import EARTH_RADIUS_M

BACKEND = "numba" if _accel.USE_NUMBA else "numpy"


def _rad(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 2)
    return np.radians(a)


# --- numba --------------------------------------------------------------------


@njit(cache=True)
def _hav(p1, l1, p2, l2):
    s1 = math.sin((p2 - p1) * 0.5)
    s2 = math.sin((l2 - l1) * 0.5)
    h = s1 * s1 + math.cos(p1) * math.cos(p2) * s2 * s2
    if h > 1.0:
        h = 1.0
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


@njit(cache=True)
def _directed_hausdorff_nb(a, b):
    worst = 0.0
    for i in range(a.shape[0]):
        best = np.inf
        for j in range(b.shape[0]):
            d = _hav(a[i, 0], a[i, 1], b[j, 0], b[j, 1])
            if d < best:
                best = d
                if best <= worst:
                    break  # cannot raise the max any more
        if best > worst:
            worst = best
    return worst


@njit(cache=True)
def _frechet_nb(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        for j in range(m):
            d = _hav(a[i, 0], a[i, 1], b[j, 0], b[j, 1])
            if i == 0 and j == 0:
                c = d
            elif i == 0:
                c = max(cur[j - 1], d)
            elif j == 0:
                c = max(prev[0], d)
            else:
                c = max(min(prev[j], cur[j - 1], prev[j - 1]), d)
            cur[j] = c
        prev, cur = cur, prev
    return prev[m - 1]


@njit(cache=True)
def _edit_nb(a, b, tol):
    n, m = a.shape[0], b.shape[0]
    prev = np.empty(m + 1, dtype=np.int64)
    cur = np.empty(m + 1, dtype=np.int64)
    for j in range(m + 1):
        prev[j] = j
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            cost = 0 if _hav(a[i - 1, 0], a[i - 1, 1], b[j - 1, 0], b[j - 1, 1]) <= tol else 1
            v = prev[j - 1] + cost
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            cur[j] = v
        prev, cur = cur, prev
    return prev[m]


def hausdorff_numba(a, b) -> float:
    ra, rb = _rad(a), _rad(b)
    return float(max(_directed_hausdorff_nb(ra, rb), _directed_hausdorff_nb(rb, ra)))


def frechet_numba(a, b) -> float:
    return float(_frechet_nb(_rad(a), _rad(b)))


def edit_numba(a, b, tol: float) -> int:
    ra, rb = _rad(a), _rad(b)
    if ra.shape[0] == 0 or rb.shape[0] == 0:
        return int(ra.shape[0] + rb.shape[0])
    return int(_edit_nb(ra, rb, float(tol)))


# --- numpy --------------------------------------------------------------------


def distance_matrix(ra: np.ndarray, rb: np.ndarray) -> np.ndarray:
    """Haversine distances (m) between every row of two radian arrays."""
    p1 = ra[:, 0:1]
    p2 = rb[:, 0][None, :]
    s1 = np.sin((p2 - p1) * 0.5)
    s2 = np.sin((rb[:, 1][None, :] - ra[:, 1:2]) * 0.5)
    h = s1 * s1 + np.cos(p1) * np.cos(p2) * s2 * s2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(h, 1.0)))


_CHUNK = 2048


def hausdorff_numpy(a, b) -> float:
    ra, rb = _rad(a), _rad(b)
    col_min = np.full(rb.shape[0], np.inf)
    worst = 0.0
    for s in range(0, ra.shape[0], _CHUNK):
        d = distance_matrix(ra[s:s + _CHUNK], rb)
        worst = max(worst, float(d.min(axis=1).max()))
        np.minimum(col_min, d.min(axis=0), out=col_min)
    return float(max(worst, col_min.max()))


def frechet_numpy(a, b) -> float:
    ra, rb = _rad(a), _rad(b)
    d = distance_matrix(ra, rb)
    n, m = d.shape
    ca = np.full((n, m), np.inf)
    ca[0, 0] = d[0, 0]
    for k in range(1, n + m - 1):
        i = np.arange(max(0, k - m + 1), min(n - 1, k) + 1)
        j = k - i
        best = np.full(i.shape, np.inf)
        up = i > 0
        best[up] = ca[i[up] - 1, j[up]]
        left = j > 0
        best[left] = np.minimum(best[left], ca[i[left], j[left] - 1])
        both = up & left
        best[both] = np.minimum(best[both], ca[i[both] - 1, j[both] - 1])
        ca[i, j] = np.maximum(best, d[i, j])
    return float(ca[n - 1, m - 1])


def edit_numpy(a, b, tol: float) -> int:
    ra, rb = _rad(a), _rad(b)
    n, m = ra.shape[0], rb.shape[0]
    if n == 0 or m == 0:
        return int(n + m)
    idx = np.arange(m + 1)
    prev = idx.copy()
    for i in range(1, n + 1):
        cost = (distance_matrix(ra[i - 1:i], rb)[0] > tol).astype(np.int64)
        t = np.empty(m + 1, dtype=np.int64)
        t[0] = i
        t[1:] = np.minimum(prev[1:] + 1, prev[:-1] + cost)
        # horizontal moves: D[j] = min_k (t[k] + j - k)
        prev = np.minimum.accumulate(t - idx) + idx
    return int(prev[m])


# --- dispatch -----------------------------------------------------------------

if BACKEND == "numba":
    hausdorff_points, frechet_points, edit_points = hausdorff_numba, frechet_numba, edit_numba
else:
    hausdorff_points, frechet_points, edit_points = hausdorff_numpy, frechet_numpy, edit_numpy


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs."""
    x = np.array([[0.0, 0.0], [0.0, 0.001]])
    hausdorff_points(x, x)
    frechet_points(x, x)
    edit_points(x, x, 20.0)
