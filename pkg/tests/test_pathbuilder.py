import pytest
from hypothesis import given, strategies as st

from routerev.errors import DegenerateRoute, EmptyCommandSequence, EmptyResponse, MissingInitialBearing
from routerev.geo import GeoPoint, Polyline, destination_point, haversine_distance
from routerev.graph import RoadEdge, RoadGraph, RoadNode
from routerev.instructions import Arrive, Continue, Depart, Face, Turn, TurnClass, render_instructions
from routerev.metrics import similarity
from routerev.pathbuilder import SNAP_CAP_M, apply_command, build, connect_path, dead_reckon, DeadReckonState

SQUARE = ["Head north, continue for 200 meters.", "Turn right, continue for 200 meters.",
          "Turn right, continue for 200 meters.", "Turn right, continue for 200 meters."]


def test_dead_reckon_straight(origin):
    s = dead_reckon([Depart(90.0, "east"), Continue(500.0)], origin)
    assert haversine_distance(s.position, destination_point(origin, 90, 500)) < 1e-6
    assert len(s.waypoints) == 2


def test_closed_square_returns(origin, small_grid):
    start = small_grid.point("r003c003")
    bp = build("\n".join(SQUARE), start, small_grid)
    assert haversine_distance(bp.end, start) <= 20.0
    assert haversine_distance(bp.raw[-1], start) < 0.1


def test_missing_initial_bearing(origin):
    with pytest.raises(MissingInitialBearing):
        dead_reckon([Turn(TurnClass.LEFT), Continue(10.0)], origin)
    s = dead_reckon([Turn(TurnClass.LEFT), Continue(10.0)], origin, require_depart=False)
    assert s.heading == pytest.approx(270.0)


def test_empty_sequences(origin):
    with pytest.raises(EmptyCommandSequence):
        dead_reckon([], origin)
    with pytest.raises(EmptyCommandSequence):
        dead_reckon([Arrive()], origin)


def test_face_reorients(origin):
    s = dead_reckon([Depart(0.0, "north"), Continue(10.0), Face(180.0, "south"), Continue(10.0)], origin)
    assert haversine_distance(s.position, origin) < 1e-6


STEPS = st.lists(st.tuples(st.sampled_from(list(TurnClass)), st.floats(1, 300)), min_size=1, max_size=6)


@given(STEPS, st.integers(0, 3))
def test_straight_noops_do_not_change_the_result(steps, at):
    origin = GeoPoint(43.65, -79.38)
    cmds = [Depart(45.0, "northeast"), Continue(50.0)]
    for t, d in steps:
        cmds += [Turn(t), Continue(d)]
    noisy = list(cmds)
    noisy.insert(min(at * 2 + 2, len(noisy)), Turn(TurnClass.STRAIGHT))
    noisy.append(Arrive())
    a, b = dead_reckon(cmds, origin), dead_reckon(noisy, origin)
    assert a.position == b.position and a.heading == b.heading and a.waypoints == b.waypoints


def test_apply_command_rejects_garbage(origin):
    with pytest.raises(TypeError):
        apply_command(DeadReckonState(origin), "left")


def test_connect_off_network_uses_chords(small_grid):
    far = GeoPoint(43.80, -79.38)
    wp = [small_grid.point("r000c000"), far, small_grid.point("r000c002")]
    bp = connect_path(wp, small_grid)
    assert bp.diagnostics["off_network"] == [1]
    assert bp.diagnostics["chord_bridges"] == 2
    assert far in bp.geometry.points
    assert bp.flagged


def test_connect_unreachable_segment():
    a, b, c = (RoadNode(i, GeoPoint(43.65, -79.38 + k * 0.002)) for k, i in enumerate("abc"))
    g = RoadGraph([a, b, c], [RoadEdge("a", "b", haversine_distance(a.point, b.point))])
    bp = connect_path([a.point, c.point], g)
    assert bp.diagnostics["unreachable_segments"] == [["a", "c"]]
    assert bp.geometry[-1] == c.point


def test_connect_follows_streets(small_grid):
    # a diagonal hop is routed around the block
    wp = [small_grid.point("r002c002"), small_grid.point("r003c003")]
    bp = connect_path(wp, small_grid)
    assert len(bp.geometry) == 3


def test_build_rejects_motionless_text(small_grid, origin):
    with pytest.raises(EmptyResponse):
        build("Straight ahead, then arrive at your destination.", origin, small_grid)
    with pytest.raises(DegenerateRoute):
        connect_path([origin], small_grid)


def test_build_geojson(small_grid):
    bp = build("\n".join(SQUARE), small_grid.point("r003c003"), small_grid)
    f = bp.to_geojson()
    assert f["geometry"]["type"] == "LineString"
    assert f["properties"]["parse"]["n_lines"] == 4
    lon, lat = f["geometry"]["coordinates"][0]
    assert (lat, lon) == bp.geometry[0].as_tuple()


def test_render_then_build_recovers_route(small_grid):
    path = small_grid.shortest_path("r001c001", "r008c006").nodes
    route = Polyline(small_grid.point(n) for n in path)
    lines = render_instructions(route, small_grid).lines
    bp = build("\n".join(lines), route[0], small_grid)
    assert similarity(bp.geometry, route).value >= 85


def test_snap_cap_default():
    assert SNAP_CAP_M == 250.0
