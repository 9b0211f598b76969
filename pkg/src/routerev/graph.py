"""Pedestrian road network and the routing engine that runs on it.

Graphs are undirected, cost is edge length, and instances are treated as
immutable once built. Node ids are strings; every deterministic tie-break
compares them lexicographically.
"""

from __future__ import annotations

import heapq
import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .errors import DanglingNode, EmptyGraph, InvalidDimension, NotAPath, ParseError, Unreachable
from .geo import GeoPoint, LocalFrame, Polyline, haversine_array, haversine_distance

_TIE_TOL_M = 1e-6


@dataclass(frozen=True, slots=True)
class RoadNode:
    id: str
    point: GeoPoint


@dataclass(frozen=True, slots=True)
class RoadEdge:
    u: str
    v: str
    length: float
    name: str | None = None


@dataclass(frozen=True, slots=True)
class PathResult:
    nodes: tuple[str, ...]
    length: float


class RoutingEngine(Protocol):
    def nearest_node(self, p: GeoPoint) -> RoadNode: ...

    def shortest_path(self, s: str, t: str) -> PathResult: ...


class _GridIndex:
    """Fixed-cell hash over node positions in a local metric frame."""

    def __init__(self, ids: list[str], coords: np.ndarray, cell: float):
        self.cell = cell
        self.frame = LocalFrame(float(coords[:, 0].mean()), float(coords[:, 1].mean()))
        xy = self.frame.to_xy(coords)
        keys = np.floor(xy / cell).astype(np.int64)
        self.buckets: dict[tuple[int, int], list[int]] = {}
        for i, (kx, ky) in enumerate(keys):
            self.buckets.setdefault((int(kx), int(ky)), []).append(i)
        self.kmin = keys.min(axis=0)
        self.kmax = keys.max(axis=0)

    def candidates(self, p: GeoPoint, coords: np.ndarray) -> np.ndarray | None:
        """Indices guaranteed to contain the nearest node, or None to request a full scan."""
        (x, y), = self.frame.to_xy([[p.lat, p.lon]])
        kx, ky = math.floor(x / self.cell), math.floor(y / self.cell)
        margin = 2
        if (kx < self.kmin[0] - margin or kx > self.kmax[0] + margin
                or ky < self.kmin[1] - margin or ky > self.kmax[1] + margin):
            return None
        found: list[int] = []
        best = math.inf
        r = 0
        span = int(max(self.kmax[0] - self.kmin[0], self.kmax[1] - self.kmin[1])) + 2 * margin + 2
        while r <= span:
            for cx in range(kx - r, kx + r + 1):
                if cx < self.kmin[0] or cx > self.kmax[0]:
                    continue
                rows = (ky - r, ky + r) if abs(cx - kx) != r else range(ky - r, ky + r + 1)
                for cy in rows:
                    bucket = self.buckets.get((cx, cy))
                    if bucket:
                        found.extend(bucket)
            if found and best == math.inf:
                idx = np.asarray(found)
                best = float(haversine_array(p.lat, p.lon, coords[idx, 0], coords[idx, 1]).min())
            # rings 0..r cover every point within r*cell of p; 1% slack absorbs projection error
            if best < math.inf and best + _TIE_TOL_M < 0.99 * r * self.cell:
                return np.asarray(found)
            r += 1
        return None


class RoadGraph:
    def __init__(self, nodes: Iterable[RoadNode], edges: Iterable[RoadEdge]):
        self.nodes: dict[str, RoadNode] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise ParseError(f"duplicate node id {n.id!r}")
            self.nodes[n.id] = n
        if not self.nodes:
            raise EmptyGraph("graph has no nodes")
        self.adj: dict[str, dict[str, RoadEdge]] = {nid: {} for nid in self.nodes}
        self.edges: list[RoadEdge] = []
        for e in edges:
            if e.u not in self.nodes or e.v not in self.nodes:
                missing = e.u if e.u not in self.nodes else e.v
                raise DanglingNode(f"edge {e.u}-{e.v} references unknown node {missing!r}")
            if e.u == e.v:
                raise ParseError(f"self-loop at node {e.u!r}")
            if e.v in self.adj[e.u]:
                continue
            if not e.length > 0:
                raise ParseError(f"edge {e.u}-{e.v} has nonpositive length")
            self.adj[e.u][e.v] = e
            self.adj[e.v][e.u] = e
            self.edges.append(e)
        self._neighbors = {u: sorted((v, e.length) for v, e in nb.items()) for u, nb in self.adj.items()}
        self._ids = sorted(self.nodes)
        self._coords = np.array([self.nodes[i].point.as_tuple() for i in self._ids], dtype=float)
        lengths = [e.length for e in self.edges]
        cell = max(50.0, statistics.median(lengths)) if lengths else 50.0
        self._index = _GridIndex(self._ids, self._coords, cell)
        self._by_coord = {(round(n.point.lat, 7), round(n.point.lon, 7)): n.id for n in self.nodes.values()}

    def __repr__(self):
        return f"RoadGraph({len(self.nodes)} nodes, {len(self.edges)} edges)"

    @property
    def node_ids(self) -> list[str]:
        return list(self._ids)

    def point(self, nid: str) -> GeoPoint:
        return self.nodes[nid].point

    def edge(self, u: str, v: str) -> RoadEdge | None:
        return self.adj.get(u, {}).get(v)

    def node_at(self, p: GeoPoint) -> str | None:
        """Id of the node sitting exactly at ``p`` (1e-7 degree key), if any."""
        return self._by_coord.get((round(p.lat, 7), round(p.lon, 7)))

    def nearest_node(self, p: GeoPoint) -> RoadNode:
        idx = self._index.candidates(p, self._coords)
        if idx is None:
            idx = np.arange(len(self._ids))
        d = haversine_array(p.lat, p.lon, self._coords[idx, 0], self._coords[idx, 1])
        near = idx[d <= d.min() + _TIE_TOL_M]
        return self.nodes[min(self._ids[i] for i in near)]

    def nearest_distance(self, p: GeoPoint) -> tuple[RoadNode, float]:
        n = self.nearest_node(p)
        return n, haversine_distance(p, n.point)

    def shortest_path(self, s: str, t: str) -> PathResult:
        """Dijkstra with labels ordered by (length, node-id sequence)."""
        if s not in self.nodes or t not in self.nodes:
            raise KeyError(s if s not in self.nodes else t)
        if s == t:
            return PathResult((s,), 0.0)
        best: dict[str, tuple[float, tuple[str, ...]]] = {s: (0.0, (s,))}
        heap = [(0.0, (s,))]
        done: set[str] = set()
        while heap:
            d, path = heapq.heappop(heap)
            u = path[-1]
            if u in done:
                continue
            done.add(u)
            if u == t:
                return PathResult(path, d)
            for v, w in self._neighbors[u]:
                if v in done:
                    continue
                cand = (d + w, path + (v,))
                cur = best.get(v)
                if cur is None or cand < cur:
                    best[v] = cand
                    heapq.heappush(heap, cand)
        raise Unreachable(f"no path from {s!r} to {t!r}")

    def component_of(self, s: str) -> set[str]:
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for v in self.adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def to_jsonl_lines(self) -> list[str]:
        out = [json.dumps({"type": "node", "id": nid, "lat": self.nodes[nid].point.lat,
                           "lon": self.nodes[nid].point.lon}) for nid in self._ids]
        for e in self.edges:
            rec = {"type": "edge", "u": e.u, "v": e.v}
            if e.name:
                rec["name"] = e.name
            out.append(json.dumps(rec))
        return out


def nearest_node(g: RoadGraph, p: GeoPoint) -> RoadNode:
    return g.nearest_node(p)


def shortest_path(g: RoadGraph, s: str, t: str) -> PathResult:
    return g.shortest_path(s, t)


def _edge(g_nodes: dict[str, RoadNode], u: str, v: str, name=None) -> RoadEdge:
    return RoadEdge(u, v, haversine_distance(g_nodes[u].point, g_nodes[v].point), name)


def build_grid(rows: int, cols: int, spacing: float, jitter: float = 0.0, seed: int = 0,
               origin: GeoPoint = GeoPoint(43.6426, -79.3871)) -> RoadGraph:
    """4-connected lattice anchored at ``origin`` (the south-west node).

    Each node is displaced by independent uniform offsets in [-jitter, jitter]
    along east and north.
    """
    if rows < 2 or cols < 2:
        raise InvalidDimension("grid needs at least 2 rows and 2 columns")
    if not spacing > 0:
        raise InvalidDimension("spacing must be positive")
    if jitter < 0 or jitter >= spacing / 4:
        raise InvalidDimension("jitter must be in [0, spacing/4)")
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-jitter, jitter, size=(rows, cols, 2)) if jitter > 0 else np.zeros((rows, cols, 2))
    frame = LocalFrame(origin.lat, origin.lon)
    nodes: dict[str, RoadNode] = {}
    for r in range(rows):
        for c in range(cols):
            xy = [[c * spacing + offsets[r, c, 0], r * spacing + offsets[r, c, 1]]]
            (lat, lon), = frame.to_latlon(xy)
            nid = f"r{r:03d}c{c:03d}"
            nodes[nid] = RoadNode(nid, GeoPoint(float(lat), float(lon)))
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = f"r{r:03d}c{c:03d}"
            if c + 1 < cols:
                edges.append(_edge(nodes, u, f"r{r:03d}c{c + 1:03d}"))
            if r + 1 < rows:
                edges.append(_edge(nodes, u, f"r{r + 1:03d}c{c:03d}"))
    return RoadGraph(nodes.values(), edges)


def _load_jsonl(text: str) -> RoadGraph:
    nodes: dict[str, RoadNode] = {}
    raw_edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["type"]
            if kind == "node":
                nid = str(rec["id"])
                if nid in nodes:
                    raise ParseError(f"duplicate node id {nid!r}", lineno)
                nodes[nid] = RoadNode(nid, GeoPoint(float(rec["lat"]), float(rec["lon"])))
            elif kind == "edge":
                raw_edges.append((lineno, str(rec["u"]), str(rec["v"]), rec.get("name"), rec.get("shape") or []))
            else:
                raise ParseError(f"unknown record type {kind!r}", lineno)
        except ParseError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"malformed record ({exc})", lineno) from exc
    if not nodes:
        raise EmptyGraph("graph file contains no nodes")
    edges = []
    for lineno, u, v, name, shape in raw_edges:
        for x in (u, v):
            if x not in nodes:
                raise DanglingNode(f"edge references unknown node {x!r}", lineno)
        chain = [u]
        for k, pt in enumerate(shape):
            sid = f"{u}~{v}~{k}"
            nodes[sid] = RoadNode(sid, GeoPoint(float(pt[0]), float(pt[1])))
            chain.append(sid)
        chain.append(v)
        edges.extend(_edge(nodes, a, b, name) for a, b in zip(chain, chain[1:]))
    return RoadGraph(nodes.values(), edges)


def _load_geojson(text: str) -> RoadGraph:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise ParseError(f"invalid JSON ({exc})") from exc
    if doc.get("type") != "FeatureCollection":
        raise ParseError("expected a GeoJSON FeatureCollection")
    nodes: dict[str, RoadNode] = {}
    edges = []

    def key(lon, lat):
        nid = f"{lat:.7f},{lon:.7f}"
        if nid not in nodes:
            nodes[nid] = RoadNode(nid, GeoPoint(round(lat, 7), round(lon, 7)))
        return nid

    for feat in doc.get("features", []):
        geom = feat.get("geometry") or {}
        name = (feat.get("properties") or {}).get("name")
        if geom.get("type") == "LineString":
            lines = [geom["coordinates"]]
        elif geom.get("type") == "MultiLineString":
            lines = geom["coordinates"]
        else:
            continue
        for coords in lines:
            ids = [key(float(c[0]), float(c[1])) for c in coords]
            for a, b in zip(ids, ids[1:]):
                if a != b:
                    edges.append(_edge(nodes, a, b, name))
    if not nodes:
        raise EmptyGraph("GeoJSON contains no LineString vertices")
    return RoadGraph(nodes.values(), edges)


def load_graph(path: str | Path, format: str | None = None) -> RoadGraph:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if format is None:
        format = "geojson" if path.suffix.lower() in {".geojson", ".json"} else "edge-list-jsonl"
    if format in ("edge-list-jsonl", "jsonl"):
        return _load_jsonl(text)
    if format == "geojson":
        return _load_geojson(text)
    raise ValueError(f"unknown graph format {format!r}")


def node_path_to_polyline(g: RoadGraph, path: Iterable[str]) -> Polyline:
    path = list(path)
    for a, b in zip(path, path[1:]):
        if g.edge(a, b) is None:
            raise NotAPath(f"{a!r} and {b!r} are not adjacent")
    return Polyline(g.point(n) for n in path)


def path_edges(g: RoadGraph, path: Iterable[str]) -> list[RoadEdge]:
    path = list(path)
    return [g.edge(a, b) for a, b in zip(path, path[1:])]
