"""Spherical-earth geodesy: distances, bearings, destination points, turn angles.

All angles are degrees. Bearings are clockwise from true north in [0, 360).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CoincidentPoints, DegenerateRoute

EARTH_RADIUS_M = 6_371_000.0
DEDUP_TOL_M = 0.01
# meters per degree of latitude on the sphere
M_PER_DEG = EARTH_RADIUS_M * math.pi / 180.0

COMPASS8 = ("north", "northeast", "east", "southeast",
            "south", "southwest", "west", "northwest")


@dataclass(frozen=True, slots=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinate out of range: ({self.lat}, {self.lon})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.lat, self.lon)


def normalize_bearing(deg: float) -> float:
    b = math.fmod(deg, 360.0)
    if b < 0:
        b += 360.0
    # fmod of tiny negatives can round up to exactly 360
    return 0.0 if b >= 360.0 else b


def normalize_deflection(deg: float) -> float:
    """Map an angle into (-180, 180]."""
    d = math.fmod(deg, 360.0)
    if d <= -180.0:
        d += 360.0
    elif d > 180.0:
        d -= 360.0
    return d


def angular_difference(a: float, b: float) -> float:
    """Absolute circular difference in [0, 180]."""
    return abs(normalize_deflection(a - b))


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dphi = p2 - p1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def haversine_array(lat1, lon1, lat2, lon2):
    """Vectorized haversine over broadcastable degree arrays."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    if a == b:
        raise CoincidentPoints(f"bearing undefined between identical points {a}")
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dlmb = math.radians(b.lon - a.lon)
    y = math.sin(dlmb) * math.cos(p2)
    x = math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dlmb)
    return normalize_bearing(math.degrees(math.atan2(y, x)))


def destination_point(origin: GeoPoint, bearing: float, distance: float) -> GeoPoint:
    if distance < 0:
        raise ValueError("distance must be nonnegative")
    if distance == 0:
        return origin
    delta = distance / EARTH_RADIUS_M
    theta = math.radians(bearing)
    p1 = math.radians(origin.lat)
    l1 = math.radians(origin.lon)
    sin_p2 = math.sin(p1) * math.cos(delta) + math.cos(p1) * math.sin(delta) * math.cos(theta)
    p2 = math.asin(max(-1.0, min(1.0, sin_p2)))
    l2 = l1 + math.atan2(math.sin(theta) * math.sin(delta) * math.cos(p1),
                         math.cos(delta) - math.sin(p1) * sin_p2)
    lon = (math.degrees(l2) + 540.0) % 360.0 - 180.0
    return GeoPoint(math.degrees(p2), lon)


def turn_angle(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> float:
    """Signed deflection at ``b``; positive is a right (clockwise) turn."""
    if a == b or b == c:
        raise CoincidentPoints("turn angle needs three distinct consecutive points")
    return normalize_deflection(initial_bearing(b, c) - initial_bearing(a, b))


def compass8(bearing: float) -> str:
    """8-wind rounding of a bearing."""
    return COMPASS8[int(((normalize_bearing(bearing) + 22.5) % 360.0) // 45.0)]


class Polyline(Sequence[GeoPoint]):
    """Ordered route geometry with consecutive near-duplicates removed."""

    __slots__ = ("_points",)

    def __init__(self, points: Iterable[GeoPoint | tuple[float, float]]):
        pts: list[GeoPoint] = []
        for p in points:
            if not isinstance(p, GeoPoint):
                p = GeoPoint(float(p[0]), float(p[1]))
            if pts and haversine_distance(pts[-1], p) < DEDUP_TOL_M:
                continue
            pts.append(p)
        self._points = tuple(pts)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Polyline(self._points[i])
        return self._points[i]

    def __len__(self):
        return len(self._points)

    def __eq__(self, other):
        return isinstance(other, Polyline) and self._points == other._points

    def __hash__(self):
        return hash(self._points)

    def __repr__(self):
        return f"Polyline({len(self)} points, {path_length(self):.1f} m)"

    @property
    def points(self) -> tuple[GeoPoint, ...]:
        return self._points

    def reversed(self) -> "Polyline":
        return Polyline(self._points[::-1])

    def to_array(self) -> np.ndarray:
        """(n, 2) array of [lat, lon] degrees."""
        return np.array([[p.lat, p.lon] for p in self._points], dtype=float).reshape(-1, 2)

    def to_lists(self) -> list[list[float]]:
        return [[p.lat, p.lon] for p in self._points]

    def require_route(self) -> "Polyline":
        if len(self) < 2:
            raise DegenerateRoute("route geometry needs at least two distinct points")
        return self


def path_length(p: Sequence[GeoPoint]) -> float:
    return math.fsum(haversine_distance(p[i], p[i + 1]) for i in range(len(p) - 1))


class LocalFrame:
    """Equirectangular tangent-plane projection around an anchor point.

    Only used for raster and bucketing work at city scale, where the error
    against the sphere is far below the 5 m raster cell.
    """

    def __init__(self, lat0: float, lon0: float):
        self.lat0 = lat0
        self.lon0 = lon0
        self.kx = M_PER_DEG * math.cos(math.radians(lat0))
        self.ky = M_PER_DEG

    @classmethod
    def around(cls, arrays: Iterable[np.ndarray]) -> "LocalFrame":
        stacked = np.vstack([a for a in arrays if len(a)])
        return cls(float(stacked[:, 0].mean()), float(stacked[:, 1].mean()))

    def to_xy(self, latlon: np.ndarray) -> np.ndarray:
        latlon = np.asarray(latlon, dtype=float).reshape(-1, 2)
        x = (latlon[:, 1] - self.lon0) * self.kx
        y = (latlon[:, 0] - self.lat0) * self.ky
        return np.column_stack([x, y])

    def to_latlon(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return np.column_stack([self.lat0 + xy[:, 1] / self.ky, self.lon0 + xy[:, 0] / self.kx])
