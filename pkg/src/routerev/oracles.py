"""Slow reference implementations used to cross-check the kernels.

They share no code with :mod:`routerev.kernels`. Each oracle takes the
point metric as an argument: the default is a separate haversine, and
:func:`matrix_metric` lets a caller pin the oracle to a precomputed
distance matrix so the combinatorics can be compared bit for bit.
"""

from __future__ import annotations

import math
import sys
from functools import lru_cache

from .geo import EARTH_RADIUS_M


def _hav(p, q) -> float:
    # haversine again, kept local so the oracle is self-contained
    p1, p2 = math.radians(p[0]), math.radians(q[0])
    h = math.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(math.radians(q[1] - p[1]) / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def brute_hausdorff(a, b, dist=_hav) -> float:
    fwd = max(min(dist(p, q) for q in b) for p in a)
    back = max(min(dist(p, q) for p in a) for q in b)
    return max(fwd, back)


def recursive_frechet(a, b, dist=_hav) -> float:
    """Textbook recursive discrete Fréchet (Eiter and Mannila) with memoization."""
    a = [tuple(p) for p in a]
    b = [tuple(q) for q in b]
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * (len(a) + len(b)) + 100))

    @lru_cache(maxsize=None)
    def c(i, j):
        d = dist(a[i], b[j])
        if i == 0 and j == 0:
            return d
        if i == 0:
            return max(c(0, j - 1), d)
        if j == 0:
            return max(c(i - 1, 0), d)
        return max(min(c(i - 1, j), c(i - 1, j - 1), c(i, j - 1)), d)

    try:
        return c(len(a) - 1, len(b) - 1)
    finally:
        sys.setrecursionlimit(limit)


def textbook_edit_distance(a, b, tol: float, dist=_hav) -> int:
    """Wagner-Fischer on full table; points match when within ``tol`` meters."""
    n, m = len(a), len(b)
    t = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        t[i][0] = i
    for j in range(m + 1):
        t[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = 0 if dist(a[i - 1], b[j - 1]) <= tol else 1
            t[i][j] = min(t[i - 1][j] + 1, t[i][j - 1] + 1, t[i - 1][j - 1] + sub)
    return t[n][m]


def matrix_metric(D):
    """Index sequences plus a lookup metric over the distance matrix ``D``."""
    n, m = len(D), len(D[0]) if len(D) else 0
    a = [(i, 0) for i in range(n)]
    b = [(0, j) for j in range(m)]
    return a, b, lambda p, q: float(D[p[0]][q[1]])
