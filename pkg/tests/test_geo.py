import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from routerev.errors import CoincidentPoints, DegenerateRoute
from routerev.geo import (EARTH_RADIUS_M, GeoPoint, LocalFrame, Polyline, angular_difference, compass8,
                          destination_point, haversine_array, haversine_distance, initial_bearing,
                          normalize_bearing, normalize_deflection, path_length, turn_angle)

lat = st.floats(-60, 60)
lon = st.floats(-179, 179)


def test_one_degree_of_latitude():
    d = haversine_distance(GeoPoint(0, 0), GeoPoint(1, 0))
    assert d == pytest.approx(EARTH_RADIUS_M * math.pi / 180, rel=1e-12)


def test_quarter_meridian():
    assert haversine_distance(GeoPoint(0, 0), GeoPoint(90, 0)) == pytest.approx(EARTH_RADIUS_M * math.pi / 2)


def test_bearings_cardinal():
    o = GeoPoint(10, 10)
    assert initial_bearing(o, GeoPoint(11, 10)) == pytest.approx(0.0, abs=1e-9)
    assert initial_bearing(o, GeoPoint(10, 11)) == pytest.approx(90.0, abs=0.1)
    assert initial_bearing(o, GeoPoint(9, 10)) == pytest.approx(180.0)
    assert initial_bearing(o, GeoPoint(10, 9)) == pytest.approx(270.0, abs=0.1)


def test_bearing_of_identical_points_raises():
    with pytest.raises(CoincidentPoints):
        initial_bearing(GeoPoint(1, 1), GeoPoint(1, 1))


@given(lat, lon, st.floats(0, 360, exclude_max=True), st.floats(1, 20000))
def test_destination_round_trip(la, lo, b, d):
    o = GeoPoint(la, lo)
    p = destination_point(o, b, d)
    assert haversine_distance(o, p) == pytest.approx(d, rel=1e-7, abs=1e-6)
    assert angular_difference(initial_bearing(o, p), b) < 1e-5


def test_haversine_array_matches_scalar():
    rng = np.random.default_rng(0)
    a = rng.uniform(-50, 50, (20, 2))
    b = rng.uniform(-50, 50, (20, 2))
    got = haversine_array(a[:, 0], a[:, 1], b[:, 0], b[:, 1])
    want = [haversine_distance(GeoPoint(*p), GeoPoint(*q)) for p, q in zip(a, b)]
    assert np.allclose(got, want, rtol=1e-12)


@pytest.mark.parametrize("x,want", [(-10, 350), (360, 0), (725, 5), (-1e-18, 0)])
def test_normalize_bearing(x, want):
    assert normalize_bearing(x) == pytest.approx(want)


@pytest.mark.parametrize("x,want", [(190, -170), (-180, 180), (180, 180), (-190, 170), (540, 180)])
def test_normalize_deflection(x, want):
    assert normalize_deflection(x) == pytest.approx(want)


def test_turn_angle_sign(origin):
    n = destination_point(origin, 0, 100)
    right = destination_point(n, 90, 100)
    left = destination_point(n, 270, 100)
    assert turn_angle(origin, n, right) == pytest.approx(90, abs=0.1)
    assert turn_angle(origin, n, left) == pytest.approx(-90, abs=0.1)


@pytest.mark.parametrize("b,word", [(0, "north"), (22.4, "north"), (22.6, "northeast"), (100, "east"),
                                    (341.6, "north"), (337.4, "northwest"), (200, "south")])
def test_compass8(b, word):
    assert compass8(b) == word


def test_polyline_dedup_and_reverse(origin):
    p = Polyline([origin, origin, (origin.lat + 1e-9, origin.lon), destination_point(origin, 0, 10)])
    assert len(p) == 2
    assert p.reversed()[0] == p[-1]
    assert path_length(p) == pytest.approx(10, rel=1e-9)
    with pytest.raises(DegenerateRoute):
        Polyline([origin]).require_route()


def test_local_frame_round_trip(origin):
    f = LocalFrame(origin.lat, origin.lon)
    pts = np.array([[origin.lat + 0.01, origin.lon - 0.02], [origin.lat, origin.lon]])
    back = f.to_latlon(f.to_xy(pts))
    assert np.allclose(back, pts, atol=1e-12)
    (x, y), = f.to_xy([[destination_point(origin, 90, 500).lat, destination_point(origin, 90, 500).lon]])
    assert x == pytest.approx(500, rel=1e-4) and abs(y) < 0.1


def test_geopoint_range():
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
