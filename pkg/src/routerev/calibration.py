"""Constructed route pairs that pin the similarity scale to fixed anchors.

The anchors: an identical copy scores 100, a copy moved 5 km scores
below 30, a copy missing its last 10% scores above 80, and a parallel
copy scores lower the further it is pushed sideways.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geo import GeoPoint, Polyline, destination_point, haversine_distance, initial_bearing
from .metrics import DEFAULT_PARAMS, DEFAULT_WEIGHTS, MetricParams, SimilarityWeights, similarity

ORIGIN = GeoPoint(43.65, -79.38)
# north, east, north: 800 m with two plain turns
LEGS = ((0.0, 320.0), (90.0, 280.0), (0.0, 200.0))
LATERAL_OFFSETS = (0.0, 25.0, 50.0, 100.0, 200.0, 400.0)


def calibration_route(origin: GeoPoint = ORIGIN, legs=LEGS) -> Polyline:
    pts = [origin]
    for bearing, dist in legs:
        pts.append(destination_point(pts[-1], bearing, dist))
    return Polyline(pts)


def translate(p: Polyline, bearing: float, distance: float) -> Polyline:
    return Polyline([destination_point(q, bearing, distance) for q in p])


def truncate(p: Polyline, fraction: float) -> Polyline:
    """Drop the final ``fraction`` of the route's length, cutting mid-segment if needed."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must be in [0, 1)")
    pts = p.points
    seg = [haversine_distance(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    keep = sum(seg) * (1.0 - fraction)
    out = [pts[0]]
    for i, s in enumerate(seg):
        if keep <= s:
            if keep > 0:
                out.append(destination_point(pts[i], initial_bearing(pts[i], pts[i + 1]), keep))
            break
        out.append(pts[i + 1])
        keep -= s
    return Polyline(out)


@dataclass(frozen=True)
class CalibrationResult:
    identical: float
    translated_5km: float
    truncated_10pct: float
    lateral: tuple[float, ...]

    @property
    def identical_ok(self) -> bool:
        return abs(self.identical - 100.0) <= 1e-6

    @property
    def translated_ok(self) -> bool:
        return self.translated_5km < 30.0

    @property
    def truncated_ok(self) -> bool:
        return self.truncated_10pct > 80.0

    @property
    def lateral_ok(self) -> bool:
        return all(a > b for a, b in zip(self.lateral, self.lateral[1:]))

    @property
    def ok(self) -> bool:
        return self.identical_ok and self.translated_ok and self.truncated_ok and self.lateral_ok


def calibrate(weights: SimilarityWeights = DEFAULT_WEIGHTS, params: MetricParams = DEFAULT_PARAMS,
              route: Polyline | None = None) -> CalibrationResult:
    r = route if route is not None else calibration_route()
    sim = lambda other: similarity(r, other, weights, params).value  # noqa: E731
    return CalibrationResult(
        identical=sim(Polyline(r.points)),
        translated_5km=sim(translate(r, 90.0, 5000.0)),
        truncated_10pct=sim(truncate(r, 0.1)),
        lateral=tuple(sim(translate(r, 90.0, d)) for d in LATERAL_OFFSETS),
    )
