"""Geometric comparison of two routes and the weighted similarity score."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .errors import DegenerateRoute, EmptyUnion, UnknownMetric, ZeroLengthReference
from .geo import (EARTH_RADIUS_M, GeoPoint, LocalFrame, Polyline, angular_difference, haversine_array,
                  haversine_distance, initial_bearing, path_length)

COMPONENTS = ("LR", "HD", "FD", "ED", "JI", "A", "SCO")


@dataclass(frozen=True)
class MetricParams:
    step: float = 5.0
    match_tol: float = 20.0
    buffer: float = 20.0
    cell: float = 5.0
    lambda_hd: float = 150.0
    lambda_fd: float = 250.0
    lambda_sco: float = 150.0
    return_tol: float = 20.0


DEFAULT_PARAMS = MetricParams()


@dataclass(frozen=True)
class SimilarityWeights:
    LR: float = 1 / 7
    HD: float = 1 / 7
    FD: float = 1 / 7
    ED: float = 1 / 7
    JI: float = 1 / 7
    A: float = 1 / 7
    SCO: float = 1 / 7

    def __post_init__(self):
        vals = [getattr(self, k) for k in COMPONENTS]
        if any(v < 0 for v in vals):
            raise ValueError("similarity weights must be nonnegative")
        if abs(math.fsum(vals) - 1.0) > 1e-9:
            raise ValueError(f"similarity weights must sum to 1, got {math.fsum(vals)!r}")

    @classmethod
    def from_mapping(cls, m: Mapping[str, float]) -> "SimilarityWeights":
        unknown = set(m) - set(COMPONENTS)
        if unknown:
            raise UnknownMetric(", ".join(sorted(unknown)))
        return cls(**{k: float(v) for k, v in m.items()})

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in COMPONENTS}


DEFAULT_WEIGHTS = SimilarityWeights()


# --- resampling ---------------------------------------------------------------


def _as_array(p) -> np.ndarray:
    if isinstance(p, Polyline):
        return p.to_array()
    return np.asarray(p, dtype=float).reshape(-1, 2)


def densify(p, step: float = 5.0) -> np.ndarray:
    """Points at equal arc-length spacing of at most ``step`` meters, both ends included.

    Spacing is uniform regardless of how many vertices the input carries, so
    point-count based metrics compare routes rather than digitization.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    a = _as_array(p)
    if len(a) < 2:
        return a.copy()
    cum = _cumlen(a)
    k = max(1, math.ceil(cum[-1] / step - 1e-9))
    return _interp(a, cum, np.linspace(0.0, cum[-1], k + 1))


def resample_pair(a, b, step: float = 5.0) -> tuple[np.ndarray, np.ndarray]:
    """Resample both routes at the same arc-length fractions."""
    aa, bb = _as_array(a), _as_array(b)
    if len(aa) < 2 or len(bb) < 2:
        raise DegenerateRoute("resampling needs two routes with at least two points")
    la, lb = _cumlen(aa), _cumlen(bb)
    if la[-1] <= 0 or lb[-1] <= 0:
        raise DegenerateRoute("zero-length route")
    k = max(2, math.ceil(max(la[-1], lb[-1]) / step) + 1)
    f = np.linspace(0.0, 1.0, k)
    return _interp(aa, la, f * la[-1]), _interp(bb, lb, f * lb[-1])


def _cumlen(a: np.ndarray) -> np.ndarray:
    seg = haversine_array(a[:-1, 0], a[:-1, 1], a[1:, 0], a[1:, 1])
    return np.concatenate([[0.0], np.cumsum(seg)])


def _interp(a: np.ndarray, cum: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.column_stack([np.interp(s, cum, a[:, 0]), np.interp(s, cum, a[:, 1])])


def _bearings(a: np.ndarray) -> np.ndarray:
    p1, p2 = np.radians(a[:-1, 0]), np.radians(a[1:, 0])
    dl = np.radians(a[1:, 1] - a[:-1, 1])
    y = np.sin(dl) * np.cos(p2)
    x = np.cos(p1) * np.sin(p2) - np.sin(p1) * np.cos(p2) * np.cos(dl)
    return np.degrees(np.arctan2(y, x)) % 360.0


# --- components ---------------------------------------------------------------


def length_ratio(a: Polyline, b: Polyline) -> float:
    lb = path_length(b)
    if lb <= 0:
        raise ZeroLengthReference("reference route has zero length")
    return path_length(a) / lb


def hausdorff(a, b, step: float = 5.0) -> float:
    da, db = densify(a, step), densify(b, step)
    if len(da) == 0 or len(db) == 0:
        raise DegenerateRoute("Hausdorff distance of an empty route")
    return kernels.hausdorff_points(da, db)


def discrete_frechet(a, b, step: float = 5.0) -> float:
    da, db = densify(a, step), densify(b, step)
    if len(da) == 0 or len(db) == 0:
        raise DegenerateRoute("Fréchet distance of an empty route")
    return kernels.frechet_points(da, db)


def polyline_edit_distance(a, b, step: float = 5.0, match_tol: float = 20.0) -> int:
    return kernels.edit_points(densify(a, step), densify(b, step), match_tol)


def jaccard(a, b, buffer: float = 20.0, cell: float = 5.0, step: float | None = None) -> float:
    """Overlap of the two ``buffer``-wide corridors, measured on a ``cell`` raster."""
    if buffer <= 0 or cell <= 0:
        raise ValueError("buffer and cell must be positive")
    step = cell if step is None else step
    da, db = densify(a, step), densify(b, step)
    if len(da) == 0 and len(db) == 0:
        raise EmptyUnion("both routes are empty")
    frame = LocalFrame.around([da, db])
    xa, xb = frame.to_xy(da), frame.to_xy(db)
    both = np.vstack([x for x in (xa, xb) if len(x)])
    lo = both.min(axis=0) - buffer - cell
    shape = tuple(np.ceil((both.max(axis=0) + buffer + cell - lo) / cell).astype(int) + 1)
    ma, mb = _stamp(xa, lo, shape, buffer, cell), _stamp(xb, lo, shape, buffer, cell)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        raise EmptyUnion("buffered routes cover no raster cell")
    return np.count_nonzero(ma & mb) / union


def _stamp(xy: np.ndarray, lo: np.ndarray, shape, r: float, cell: float) -> np.ndarray:
    grid = np.zeros(shape, dtype=bool)
    if len(xy) == 0:
        return grid
    rel = (xy - lo) / cell
    base = np.floor(rel).astype(int)
    reach = int(math.ceil(r / cell)) + 1
    for di in range(-reach, reach + 1):
        for dj in range(-reach, reach + 1):
            ci = base[:, 0] + di
            cj = base[:, 1] + dj
            # distance from each point to the candidate cell center, in meters
            dx = (ci + 0.5 - rel[:, 0]) * cell
            dy = (cj + 0.5 - rel[:, 1]) * cell
            hit = dx * dx + dy * dy <= r * r
            grid[ci[hit], cj[hit]] = True
    return grid


def bearing_divergence(a, b, step: float = 5.0) -> float:
    ra, rb = resample_pair(a, b, step)
    diff = np.abs((_bearings(ra) - _bearings(rb) + 180.0) % 360.0 - 180.0)
    return float(diff.mean())


def coord_offsets(a, b, step: float = 5.0) -> np.ndarray:
    ra, rb = resample_pair(a, b, step)
    return haversine_array(ra[:, 0], ra[:, 1], rb[:, 0], rb[:, 1])


def coord_offset(a, b, step: float = 5.0) -> float:
    return float(coord_offsets(a, b, step).mean())


# --- aggregation --------------------------------------------------------------


@dataclass(frozen=True)
class MetricVector:
    length_ratio: float
    hausdorff: float
    frechet: float
    edit_distance: int
    jaccard: float
    angle: float
    coord_offset: float
    coord_offset_sum: float = 0.0
    edit_max_len: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def normalize_component(name: str, raw: float, *, params: MetricParams = DEFAULT_PARAMS,
                        max_len: int | None = None) -> float:
    """Map a raw metric value onto a 0-100 subscore (100 = identical)."""
    if name == "LR":
        if raw <= 0:
            return 0.0
        return 100.0 * min(raw, 1.0 / raw)
    if name == "HD":
        return 100.0 * math.exp(-raw / params.lambda_hd)
    if name == "FD":
        return 100.0 * math.exp(-raw / params.lambda_fd)
    if name == "SCO":
        return 100.0 * math.exp(-raw / params.lambda_sco)
    if name == "ED":
        if not max_len:
            return 100.0 if raw == 0 else 0.0
        return 100.0 * min(1.0, max(0.0, 1.0 - raw / max_len))
    if name == "JI":
        return 100.0 * min(1.0, max(0.0, raw))
    if name == "A":
        return 100.0 * (1.0 - min(180.0, max(0.0, raw)) / 180.0)
    raise UnknownMetric(name)


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    components: dict[str, float] = field(default_factory=dict)
    metrics: MetricVector | None = None

    def to_dict(self) -> dict:
        out = {"value": self.value, "components": dict(self.components)}
        if self.metrics is not None:
            out["metrics"] = self.metrics.to_dict()
        return out


def compute_metrics(a: Polyline, b: Polyline, params: MetricParams = DEFAULT_PARAMS) -> MetricVector:
    for p in (a, b):
        if len(p) < 2:
            raise DegenerateRoute("similarity needs routes with at least two points")
    da, db = densify(a, params.step), densify(b, params.step)
    offs = coord_offsets(a, b, params.step)
    return MetricVector(
        length_ratio=length_ratio(a, b),
        hausdorff=kernels.hausdorff_points(da, db),
        frechet=kernels.frechet_points(da, db),
        edit_distance=kernels.edit_points(da, db, params.match_tol),
        jaccard=jaccard(a, b, params.buffer, params.cell),
        angle=bearing_divergence(a, b, params.step),
        coord_offset=float(offs.mean()),
        coord_offset_sum=float(offs.sum()),
        edit_max_len=max(len(da), len(db)),
    )


def score_metrics(m: MetricVector, weights: SimilarityWeights = DEFAULT_WEIGHTS,
                  params: MetricParams = DEFAULT_PARAMS) -> SimilarityScore:
    raw = {"LR": m.length_ratio, "HD": m.hausdorff, "FD": m.frechet, "ED": m.edit_distance,
           "JI": m.jaccard, "A": m.angle, "SCO": m.coord_offset}
    comps = {k: normalize_component(k, raw[k], params=params, max_len=m.edit_max_len) for k in COMPONENTS}
    w = weights.as_dict()
    value = math.fsum(w[k] * comps[k] for k in COMPONENTS)
    # weights sum to 1 only within rounding; keep identical routes at exactly 100
    value = min(100.0, max(0.0, round(value, 9)))
    return SimilarityScore(value, comps, m)


def similarity(a: Polyline, b: Polyline, weights: SimilarityWeights = DEFAULT_WEIGHTS,
               params: MetricParams = DEFAULT_PARAMS) -> SimilarityScore:
    return score_metrics(compute_metrics(a, b, params), weights, params)


def _endpoint(x) -> GeoPoint:
    if isinstance(x, GeoPoint):
        return x
    geom = getattr(x, "geometry", x)
    if len(geom) == 0:
        raise DegenerateRoute("route geometry is empty")
    return geom[-1]


def return_success(reversed_path, original_start: GeoPoint, tol: float = 20.0) -> bool:
    return haversine_distance(_endpoint(reversed_path), original_start) <= tol


def deviation_angle(reversed_path, record) -> float:
    """Bearing error at the destination between the true and the achieved return."""
    d, s = record.end, record.start
    return angular_difference(initial_bearing(d, s), initial_bearing(d, _endpoint(reversed_path)))


__all__ = [
    "COMPONENTS", "EARTH_RADIUS_M", "MetricParams", "MetricVector", "SimilarityScore", "SimilarityWeights",
    "bearing_divergence", "compute_metrics", "coord_offset", "deviation_angle", "densify",
    "discrete_frechet", "hausdorff", "jaccard", "length_ratio", "normalize_component",
    "polyline_edit_distance", "resample_pair", "return_success", "score_metrics", "similarity",
]
