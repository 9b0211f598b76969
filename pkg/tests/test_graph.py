import json

import networkx as nx
import numpy as np
import pytest

from routerev.errors import DanglingNode, EmptyGraph, InvalidDimension, NotAPath, ParseError, Unreachable
from routerev.geo import GeoPoint, destination_point, haversine_distance
from routerev.graph import RoadEdge, RoadGraph, RoadNode, build_grid, load_graph, node_path_to_polyline


def to_nx(g):
    G = nx.Graph()
    for e in g.edges:
        G.add_edge(e.u, e.v, weight=e.length)
    return G


def test_grid_shape(small_grid):
    assert len(small_grid.nodes) == 144
    assert len(small_grid.edges) == 2 * 12 * 11


def test_grid_jitter_bounds():
    g0 = build_grid(5, 5, 100, 0, 0)
    g1 = build_grid(5, 5, 100, 10, 0)
    for nid in g0.node_ids:
        assert haversine_distance(g0.point(nid), g1.point(nid)) <= 10 * 2 ** 0.5 + 1e-6


def test_grid_is_deterministic():
    a, b = build_grid(6, 6, 100, 10, 3), build_grid(6, 6, 100, 10, 3)
    assert a.to_jsonl_lines() == b.to_jsonl_lines()


@pytest.mark.parametrize("args", [(1, 5, 100), (5, 5, 0), (5, 5, 100, 30)])
def test_grid_rejects_bad_dimensions(args):
    with pytest.raises(InvalidDimension):
        build_grid(*args)


def test_shortest_path_matches_networkx(small_grid):
    G = to_nx(small_grid)
    rng = np.random.default_rng(0)
    ids = small_grid.node_ids
    for _ in range(40):
        s, t = rng.choice(ids, 2, replace=False)
        res = small_grid.shortest_path(str(s), str(t))
        assert res.length == pytest.approx(nx.dijkstra_path_length(G, s, t), rel=1e-12)
        assert res.nodes[0] == s and res.nodes[-1] == t
        node_path_to_polyline(small_grid, res.nodes)


def test_shortest_path_deterministic_ties():
    g = build_grid(4, 4, 100, 0, 0)
    assert g.shortest_path("r000c000", "r003c003").nodes == g.shortest_path("r000c000", "r003c003").nodes


def test_unreachable():
    a, b, c = (RoadNode(i, GeoPoint(0, k * 0.001)) for k, i in enumerate("abc"))
    g = RoadGraph([a, b, c], [RoadEdge("a", "b", 100)])
    with pytest.raises(Unreachable):
        g.shortest_path("a", "c")
    assert g.component_of("a") == {"a", "b"}


def test_nearest_node_matches_brute_force(small_grid):
    rng = np.random.default_rng(1)
    c = small_grid.point("r006c006")
    for _ in range(100):
        p = destination_point(c, rng.uniform(0, 360), rng.uniform(0, 900))
        brute = min(small_grid.node_ids, key=lambda n: haversine_distance(p, small_grid.point(n)))
        got = small_grid.nearest_node(p)
        assert haversine_distance(p, got.point) == pytest.approx(haversine_distance(p, small_grid.point(brute)))


def test_nearest_node_far_outside(small_grid):
    n = small_grid.nearest_node(GeoPoint(0, 0))
    assert n.id in small_grid.nodes


def test_not_a_path(small_grid):
    with pytest.raises(NotAPath):
        node_path_to_polyline(small_grid, ["r000c000", "r005c005"])


def test_jsonl_round_trip(tmp_path, small_grid):
    p = tmp_path / "g.jsonl"
    p.write_text("\n".join(small_grid.to_jsonl_lines()) + "\n")
    g = load_graph(p)
    assert len(g.nodes) == len(small_grid.nodes) and len(g.edges) == len(small_grid.edges)
    assert g.shortest_path("r000c000", "r011c011").length == pytest.approx(
        small_grid.shortest_path("r000c000", "r011c011").length, rel=1e-9)


def test_jsonl_errors_name_lines(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"type":"node","id":"a","lat":0,"lon":0}\n{"type":"edge","u":"a","v":"zz"}\n')
    with pytest.raises(DanglingNode) as ei:
        load_graph(p)
    assert ei.value.line == 2
    p.write_text('{"type":"node","id":"a","lat":0,"lon":0}\nnot json\n')
    with pytest.raises(ParseError) as ei:
        load_graph(p)
    assert ei.value.line == 2
    p.write_text("")
    with pytest.raises(EmptyGraph):
        load_graph(p)


def test_jsonl_shape_points(tmp_path):
    p = tmp_path / "s.jsonl"
    lines = [{"type": "node", "id": "a", "lat": 0.0, "lon": 0.0}, {"type": "node", "id": "b", "lat": 0.0, "lon": 0.002},
             {"type": "edge", "u": "a", "v": "b", "shape": [[0.001, 0.001]], "name": "Bent St"}]
    p.write_text("\n".join(json.dumps(x) for x in lines))
    g = load_graph(p)
    r = g.shortest_path("a", "b")
    assert len(r.nodes) == 3 and r.length > haversine_distance(g.point("a"), g.point("b"))


def test_geojson_loader(tmp_path):
    fc = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"name": "Main"},
         "geometry": {"type": "LineString", "coordinates": [[0, 0], [0.001, 0], [0.002, 0]]}},
        {"type": "Feature", "properties": {},
         "geometry": {"type": "LineString", "coordinates": [[0.001, 0], [0.001, 0.001]]}}]}
    p = tmp_path / "g.geojson"
    p.write_text(json.dumps(fc))
    g = load_graph(p)
    assert len(g.nodes) == 4 and len(g.edges) == 3
    assert g.edge("0.0000000,0.0000000", "0.0000000,0.0010000").name == "Main"
