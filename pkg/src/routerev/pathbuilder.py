"""Instructions to geometry: parse, dead-reckon, then connect on the road graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import DegenerateRoute, EmptyCommandSequence, EmptyResponse, MissingInitialBearing, Unreachable
from .geo import GeoPoint, Polyline, destination_point, normalize_bearing
from .graph import RoadGraph, node_path_to_polyline
from .instructions import (
    COMPASS16, REPRESENTATIVE_DEFLECTION, Arrive, Command, Continue, Depart, Face,
    ParseDiagnostics, Turn, is_motion, parse_instructions,
)

SNAP_CAP_M = 250.0
DEFAULT_HEADING = 0.0


def heading_of(c: Command) -> float:
    """Bearing carried by an absolute-direction command."""
    if not isinstance(c, (Depart, Face)):
        raise MissingInitialBearing(f"first motion command {c!r} carries no absolute direction")
    if c.word is not None:
        return COMPASS16[c.word]
    return normalize_bearing(c.bearing)


@dataclass(frozen=True)
class DeadReckonState:
    position: GeoPoint
    heading: float = DEFAULT_HEADING
    waypoints: tuple[GeoPoint, ...] = ()

    def __post_init__(self):
        if not self.waypoints:
            object.__setattr__(self, "waypoints", (self.position,))
        object.__setattr__(self, "heading", normalize_bearing(self.heading))


def apply_command(state: DeadReckonState, c: Command,
                  deflections: dict = REPRESENTATIVE_DEFLECTION) -> DeadReckonState:
    if isinstance(c, (Depart, Face)):
        return DeadReckonState(state.position, heading_of(c), state.waypoints)
    if isinstance(c, Turn):
        return DeadReckonState(state.position, state.heading + deflections[c.turn], state.waypoints)
    if isinstance(c, Continue):
        p = destination_point(state.position, state.heading, c.distance)
        return DeadReckonState(p, state.heading, state.waypoints + (p,))
    if isinstance(c, Arrive):
        return state
    raise TypeError(f"not a command: {c!r}")


def dead_reckon(commands: Sequence[Command], start: GeoPoint, *, require_depart: bool = True,
                deflections: dict = REPRESENTATIVE_DEFLECTION) -> DeadReckonState:
    """Fold the commands over a state anchored at ``start``.

    With ``require_depart=False`` a sequence that never states an absolute
    direction starts from the default north heading instead of raising.
    """
    if not commands:
        raise EmptyCommandSequence("no commands to dead-reckon")
    first = next((c for c in commands if is_motion(c)), None)
    if first is None:
        raise EmptyCommandSequence("command sequence has no motion commands")
    if require_depart and not isinstance(first, (Depart, Face)):
        raise MissingInitialBearing(f"first motion command {first!r} carries no absolute direction")
    state = DeadReckonState(start)
    for c in commands:
        state = apply_command(state, c, deflections)
    return state


@dataclass
class BuiltPath:
    raw: Polyline
    snapped: tuple[str | None, ...]
    geometry: Polyline
    diagnostics: dict = field(default_factory=dict)
    parse: ParseDiagnostics | None = None
    commands: tuple[Command, ...] = ()

    @property
    def end(self) -> GeoPoint:
        return self.geometry[-1]

    @property
    def flagged(self) -> bool:
        d = self.diagnostics
        return bool(d.get("unreachable_segments") or d.get("off_network"))

    def to_geojson(self) -> dict:
        props = dict(self.diagnostics)
        if self.parse is not None:
            props["parse"] = self.parse.to_dict()
        return {
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[p.lon, p.lat] for p in self.geometry]},
            "properties": props,
        }


def connect_path(waypoints: Sequence[GeoPoint], g: RoadGraph, snap_cap: float = SNAP_CAP_M) -> BuiltPath:
    """Snap waypoints to nodes and join consecutive snaps with shortest paths.

    Waypoints farther than ``snap_cap`` from every node stay where they are
    and are reached by a straight chord; so are node pairs that the graph
    cannot connect. Both cases are recorded in the diagnostics.
    """
    if len(waypoints) < 2:
        raise DegenerateRoute("need at least two waypoints to connect")
    snapped: list[str | None] = []
    off_network: list[int] = []
    for i, p in enumerate(waypoints):
        node, dist = g.nearest_distance(p)
        if dist > snap_cap:
            snapped.append(None)
            off_network.append(i)
        else:
            snapped.append(node.id)

    # stops: ("node", id) or ("free", point); consecutive duplicate snaps collapse
    stops: list[tuple[str, object]] = []
    for i, nid in enumerate(snapped):
        stop = ("node", nid) if nid is not None else ("free", waypoints[i])
        if stops and stops[-1] == stop:
            continue
        stops.append(stop)

    pts: list[GeoPoint] = []
    unreachable: list[list[str]] = []
    chords = 0

    def extend(seq):
        for p in seq:
            if not pts or pts[-1] != p:
                pts.append(p)

    for k, (kind, val) in enumerate(stops):
        if k == 0:
            extend([g.point(val) if kind == "node" else val])
            continue
        pkind, pval = stops[k - 1]
        if kind == "node" and pkind == "node":
            try:
                res = g.shortest_path(pval, val)
                extend(node_path_to_polyline(g, res.nodes).points)
                continue
            except Unreachable:
                unreachable.append([pval, val])
        chords += 1
        extend([g.point(val) if kind == "node" else val])

    diag = {
        "n_waypoints": len(waypoints),
        "n_stops": len(stops),
        "off_network": off_network,
        "unreachable_segments": unreachable,
        "chord_bridges": chords,
    }
    return BuiltPath(Polyline(waypoints), tuple(snapped), Polyline(pts), diag)


def build(instructions: str, start: GeoPoint, g: RoadGraph, *, require_depart: bool = True,
          snap_cap: float = SNAP_CAP_M, deflections: dict = REPRESENTATIVE_DEFLECTION) -> BuiltPath:
    """Normalize and parse ``instructions``, dead-reckon from ``start``, connect on ``g``."""
    parsed = parse_instructions(instructions)
    if parsed.diagnostics.n_motion == 0:
        raise EmptyResponse("response contains no motion commands")
    state = dead_reckon(parsed.commands, start, require_depart=require_depart, deflections=deflections)
    if len(state.waypoints) < 2:
        raise DegenerateRoute("instructions never move away from the start")
    bp = connect_path(state.waypoints, g, snap_cap)
    bp.parse = parsed.diagnostics
    bp.commands = tuple(parsed.commands)
    return bp
