"""The navigation mini-language.

Geometry is rendered into terse turn-by-turn lines ("Turn slight right,
continue for 37.7 meters.") and free text is normalized then parsed back
into :class:`Command` sequences. The canonical grammar is documented in
``docs/grammar.md``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import DegenerateRoute, EmptyResponse, UnparseableLine
from .geo import (GeoPoint, LocalFrame, Polyline, compass8, destination_point, haversine_distance, initial_bearing,
                  normalize_bearing, normalize_deflection)


class TurnClass(str, Enum):
    STRAIGHT = "straight"
    SLIGHT_LEFT = "slight-left"
    SLIGHT_RIGHT = "slight-right"
    LEFT = "left"
    RIGHT = "right"
    SHARP_LEFT = "sharp-left"
    SHARP_RIGHT = "sharp-right"
    U_TURN = "u-turn"
    KEEP_LEFT = "keep-left"
    KEEP_RIGHT = "keep-right"

    @property
    def phrase(self) -> str:
        return self.value.replace("-", " ")

    @property
    def mirrored(self) -> "TurnClass":
        if "left" in self.value:
            return TurnClass(self.value.replace("left", "right"))
        if "right" in self.value:
            return TurnClass(self.value.replace("right", "left"))
        return self


@dataclass(frozen=True)
class TurnBands:
    """Upper band edges in degrees of absolute deflection.

    |d| < straight -> straight; < slight -> slight; < plain -> plain turn;
    <= sharp -> sharp; otherwise u-turn.
    """

    straight: float = 11.0
    slight: float = 45.0
    plain: float = 136.0
    sharp: float = 170.0


DEFAULT_BANDS = TurnBands()

# Heading change applied when a turn is executed; band midpoints.
REPRESENTATIVE_DEFLECTION = {
    TurnClass.STRAIGHT: 0.0,
    TurnClass.SLIGHT_LEFT: -27.5,
    TurnClass.SLIGHT_RIGHT: 27.5,
    TurnClass.LEFT: -90.0,
    TurnClass.RIGHT: 90.0,
    TurnClass.SHARP_LEFT: -153.0,
    TurnClass.SHARP_RIGHT: 153.0,
    TurnClass.U_TURN: 180.0,
    TurnClass.KEEP_LEFT: -20.0,
    TurnClass.KEEP_RIGHT: 20.0,
}


def classify_turn(deflection: float, bands: TurnBands = DEFAULT_BANDS) -> TurnClass:
    d = normalize_deflection(deflection)
    mag = abs(d)
    if mag < bands.straight:
        return TurnClass.STRAIGHT
    if mag > bands.sharp:
        return TurnClass.U_TURN
    if mag < bands.slight:
        return TurnClass.SLIGHT_RIGHT if d > 0 else TurnClass.SLIGHT_LEFT
    if mag < bands.plain:
        return TurnClass.RIGHT if d > 0 else TurnClass.LEFT
    return TurnClass.SHARP_RIGHT if d > 0 else TurnClass.SHARP_LEFT


# --- compass vocabulary -------------------------------------------------------

COMPASS16 = {
    "north": 0.0, "north-northeast": 22.5, "northeast": 45.0, "east-northeast": 67.5,
    "east": 90.0, "east-southeast": 112.5, "southeast": 135.0, "south-southeast": 157.5,
    "south": 180.0, "south-southwest": 202.5, "southwest": 225.0, "west-southwest": 247.5,
    "west": 270.0, "west-northwest": 292.5, "northwest": 315.0, "north-northwest": 337.5,
}
_ABBREV = {"n": "north", "nne": "north-northeast", "ne": "northeast", "ene": "east-northeast",
           "e": "east", "ese": "east-southeast", "se": "southeast", "sse": "south-southeast",
           "s": "south", "ssw": "south-southwest", "sw": "southwest", "wsw": "west-southwest",
           "w": "west", "wnw": "west-northwest", "nw": "northwest", "nnw": "north-northwest"}
_COMPACT = {w.replace("-", ""): w for w in COMPASS16}
OPPOSITE_COMPASS = {w: next(k for k, v in COMPASS16.items() if v == (b + 180.0) % 360.0)
                    for w, b in COMPASS16.items()}


def compass_word(token: str) -> str | None:
    """Canonical 16-wind word for a compass token ('North East', 'NE', 'north-east')."""
    t = re.sub(r"[\s\-]+", "", token.strip().lower())
    if t.endswith("bound"):
        t = t[:-5]
    return _COMPACT.get(t) or _ABBREV.get(t)


# --- commands -----------------------------------------------------------------


@dataclass(frozen=True)
class Depart:
    bearing: float
    word: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Face:
    """Absolute re-orientation after the first motion command."""

    bearing: float
    word: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Turn:
    turn: TurnClass


@dataclass(frozen=True)
class Continue:
    distance: float
    street: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError("Continue distance must be positive")


@dataclass(frozen=True)
class Arrive:
    pass


Command = Depart | Face | Turn | Continue | Arrive


def is_motion(c: Command) -> bool:
    if isinstance(c, Arrive):
        return False
    if isinstance(c, Turn) and c.turn is TurnClass.STRAIGHT:
        return False
    return True


def depart_for(word_or_degrees: str | float) -> Depart:
    if isinstance(word_or_degrees, str):
        w = compass_word(word_or_degrees)
        if w is None:
            raise ValueError(f"unknown compass word {word_or_degrees!r}")
        return Depart(COMPASS16[w], w)
    return Depart(normalize_bearing(float(word_or_degrees)))


# --- rendering ----------------------------------------------------------------

ARRIVAL_LINE = "Straight ahead, then arrive at your destination."


def _fmt_dist(d: float) -> str:
    return f"{d:.1f}"


def _fmt_degrees(b: float) -> str:
    return f"{round(b, 1):g}"


def _lead_text(c: Command) -> str:
    if isinstance(c, (Depart, Face)):
        return f"Head {c.word}" if c.word else f"Head {_fmt_degrees(c.bearing)} degrees"
    if isinstance(c, Turn):
        if c.turn is TurnClass.U_TURN:
            return "Make a U-turn"
        if c.turn in (TurnClass.KEEP_LEFT, TurnClass.KEEP_RIGHT):
            return f"Keep {c.turn.value.split('-')[1]}"
        return f"Turn {c.turn.phrase}"
    raise TypeError(c)


def render_line(lead: Command | None, cont: Continue | None) -> str:
    """Canonical text of one instruction step."""
    if lead is None:
        if cont is None:
            return "Continue straight."
        if cont.street:
            return f"Continue along {cont.street} for {_fmt_dist(cont.distance)} meters."
        return f"Continue for {_fmt_dist(cont.distance)} meters."
    if isinstance(lead, Turn) and lead.turn is TurnClass.STRAIGHT:
        return render_line(None, cont)
    text = _lead_text(lead)
    if cont is not None:
        if cont.street:
            text += f", along {cont.street}"
        text += f", continue for {_fmt_dist(cont.distance)} meters"
    return text + "."


def render_commands(commands: Sequence[Command]) -> list[str]:
    """Group a command sequence into canonical lines (lead + following Continue)."""
    lines: list[str] = []
    i = 0
    while i < len(commands):
        c = commands[i]
        if isinstance(c, Arrive):
            lines.append(ARRIVAL_LINE)
            i += 1
        elif isinstance(c, Continue):
            lines.append(render_line(None, c))
            i += 1
        else:
            nxt = commands[i + 1] if i + 1 < len(commands) else None
            if isinstance(nxt, Continue):
                lines.append(render_line(c, nxt))
                i += 2
            else:
                lines.append(render_line(c, None))
                i += 1
    return lines


@dataclass(frozen=True)
class InstructionSet:
    lines: tuple[str, ...]
    start: GeoPoint
    commands: tuple[Command, ...]

    @property
    def n_turns(self) -> int:
        return sum(isinstance(c, Turn) and c.turn is not TurnClass.STRAIGHT for c in self.commands)


def _street_of(graph, a: GeoPoint, b: GeoPoint) -> str | None:
    if graph is None:
        return None
    u, v = graph.node_at(a), graph.node_at(b)
    if u is None or v is None:
        return None
    e = graph.edge(u, v)
    return e.name if e is not None else None


def _abeam_distance(pos: GeoPoint, heading: float, target: GeoPoint) -> float:
    """Advance along ``heading`` from ``pos`` that ends level with ``target``."""
    frame = LocalFrame(pos.lat, pos.lon)
    (x, y), = frame.to_xy([[target.lat, target.lon]])
    t = math.radians(heading)
    return x * math.sin(t) + y * math.cos(t)


def render_instructions(route: Polyline, graph=None, heading_style: str = "compass8",
                        bands: TurnBands = DEFAULT_BANDS, distance_mode: str = "abeam") -> InstructionSet:
    """Render route geometry as canonical turn-by-turn instructions.

    The renderer follows its own instructions the way a reader would: it
    holds the stated heading (departure compass word plus the
    representative angle of every emitted turn) and a dead-reckoned
    position. Deflections are measured against that heading, so small
    kinks accumulate into a turn instead of being dropped.

    With ``distance_mode="abeam"`` (default) each stated distance is the
    advance along the held heading that brings the reader level with the
    true turn vertex. Position error then resets on every run rather than
    piling up across a staircase of short legs. ``"path"`` states the
    along-route length of each run instead.
    """
    if heading_style != "compass8":
        raise ValueError(f"unsupported heading style {heading_style!r}")
    if distance_mode not in ("abeam", "path"):
        raise ValueError(f"unknown distance mode {distance_mode!r}")
    pts = route.points
    if len(pts) < 2:
        raise DegenerateRoute("cannot render a route with fewer than two points")
    bearings = [initial_bearing(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    lengths = [haversine_distance(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]

    word = compass8(bearings[0])
    heading = COMPASS16[word]
    commands: list[Command] = [Depart(heading, word)]
    pos = pts[0]
    run = lengths[0]
    street = _street_of(graph, pts[0], pts[1])

    def flush(end: GeoPoint):
        nonlocal pos
        d = run if distance_mode == "path" else _abeam_distance(pos, heading, end)
        d = max(0.1, float(_fmt_dist(d)))
        commands.append(Continue(d, street))
        pos = destination_point(pos, heading, d)

    for i in range(1, len(bearings)):
        cls = classify_turn(bearings[i] - heading, bands)
        if cls is TurnClass.STRAIGHT:
            run += lengths[i]
            continue
        flush(pts[i])
        heading = normalize_bearing(heading + REPRESENTATIVE_DEFLECTION[cls])
        commands.append(Turn(cls))
        run = lengths[i]
        street = _street_of(graph, pts[i], pts[i + 1])
    flush(pts[-1])
    commands.append(Arrive())
    return InstructionSet(tuple(render_commands(commands)), pts[0], tuple(commands))


# --- normalization ------------------------------------------------------------

_COMPASS_WORD_RE = (
    r"(?:north[\s-]?north[\s-]?east|east[\s-]?north[\s-]?east|east[\s-]?south[\s-]?east|"
    r"south[\s-]?south[\s-]?east|south[\s-]?south[\s-]?west|west[\s-]?south[\s-]?west|"
    r"west[\s-]?north[\s-]?west|north[\s-]?north[\s-]?west|"
    r"north[\s-]?east|north[\s-]?west|south[\s-]?east|south[\s-]?west|north|south|east|west)"
)
_ABBREV_RE = r"(?:nne|ene|ese|sse|ssw|wsw|wnw|nnw|ne|nw|se|sw|n|e|s|w)"
_DEGREES_RE = r"(?:\d{1,3}(?:\.\d+)?\s*(?:°|º|degrees?\b|deg\b))"
_MOTION_VERB = r"(?:head(?:ing)?|go(?:ing)?|walk(?:ing)?|proceed(?:ing)?|travel(?:ing|ling)?|continue|turn|start|begin|face|move|set\s+off|depart)"

_ABS_TIGHT_RE = re.compile(
    rf"\b{_MOTION_VERB}\s+(?:(?:due|directly|straight|towards?|to|the|in|direction|of|heading)\s+)*"
    rf"(?P<dir>{_COMPASS_WORD_RE}(?:bound)?\b|{_ABBREV_RE}\b|{_DEGREES_RE})",
    re.IGNORECASE)
_ABS_BOUND_RE = re.compile(rf"\b(?P<dir>{_COMPASS_WORD_RE})bound\b", re.IGNORECASE)
_ABS_LOOSE_RE = re.compile(rf"\b(?P<dir>{_COMPASS_WORD_RE})\b", re.IGNORECASE)
_UTURN_RE = re.compile(r"\b(?:make|do|perform|take)\s+an?\s+u[\s-]?turn\b|\bu[\s-]?turn\b|\bturn\s+(?:a)?round\b",
                       re.IGNORECASE)
_KEEP_RE = re.compile(r"\b(?:keep|stay|fork)\s+(?:to\s+(?:the\s+)?)?(?P<side>left|right)\b", re.IGNORECASE)
_BEAR_RE = re.compile(r"\b(?:bear|veer)\s+(?:slight(?:ly)?\s+)?(?:to\s+(?:the\s+)?)?(?P<side>left|right)\b",
                      re.IGNORECASE)
_REL_RE = re.compile(
    r"\b(?:turn|go|head|make|take|hang)\s+(?:an?\s+)?(?:(?P<m1>slight(?:ly)?|sharp(?:ly)?|hard|soft)\s+)?"
    r"(?:to\s+(?:the\s+|your\s+)?)?(?:(?P<m2>slight(?:ly)?|sharp(?:ly)?|hard|soft)\s+)?(?P<side>left|right)\b",
    re.IGNORECASE)
_CONT_RE = re.compile(
    r"\b(?:continue|go|walk|proceed|carry\s+on|keep\s+going|keep\s+straight|straight\s+ahead|follow|travel|move)\b",
    re.IGNORECASE)
_DIST_RE = re.compile(
    r"(?P<num>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)\s*-?\s*"
    r"(?P<unit>kilomet(?:er|re)s?|km|met(?:er|re)s?|m|feet|foot|ft|yards?|yd|miles?|mi)\b",
    re.IGNORECASE)
_PRE_DIST_RE = re.compile(r"\b(?:after|in|within)\s+(?:about\s+|approximately\s+|roughly\s+|~)?$", re.IGNORECASE)
_ARRIVE_RE = re.compile(
    r"\barriv(?:e|ed|ing|al)\b|\b(?:have|has|will\s+have)\s+reached\b|"
    r"\breach(?:ed|ing)?\s+(?:your|the)\s+(?:destination|start(?:ing)?(?:\s+(?:point|location))?|origin)\b|"
    r"\bdestination\s+reached\b|\byou\s+are\s+(?:now\s+)?(?:back\s+)?at\s+(?:your|the)\b",
    re.IGNORECASE)
_STREET_RE = re.compile(
    r"\b(?:along|onto|on|down|up|via|into)\s+(?:the\s+)?"
    r"(?P<street>[A-Z0-9][\w'.\-]*(?:\s+(?:[A-Z0-9][\w'.\-]*|de|la|of|the|du|von|der|del))*)")
_LANDMARK_RE = re.compile(
    r"\b(?:at|near|past|passing|by|opposite|beside|toward|towards|in\s+front\s+of|next\s+to)\s+"
    r"(?:the\s+)?(?P<mark>[A-Z][^,.;]*)")
_PAREN_RE = re.compile(r"\(([^()]*)\)|\[([^\[\]]*)\]")
_COORD_RE = re.compile(
    r"-?\d{1,3}(?:\.\d+)?\s*°\s*(?:\d{1,2}\s*['′]\s*(?:\d{1,2}(?:\.\d+)?\s*(?:''|\"|″))?)?\s*[NS]?\s*,\s*"
    r"-?\d{1,3}(?:\.\d+)?\s*°\s*(?:\d{1,2}\s*['′]\s*(?:\d{1,2}(?:\.\d+)?\s*(?:''|\"|″))?)?\s*[EW]?"
    r"|-?\d{1,3}\.\d{3,}\s*,\s*-?\d{1,3}\.\d{3,}")
_LIST_MARK_RE = re.compile(r"^\s*(?:[-*•>]+\s*|\(?\d{1,3}\s*[.)]\s+|step\s*\d+\s*[:.)\-]\s*)", re.IGNORECASE)
_CLAUSE_SPLIT_RE = re.compile(
    r"\s*;\s*|(?<=[.!?])\s+(?=[A-Za-z])|,?\s+(?:and\s+)?then\s+(?=(?:turn|head|keep|bear|veer|make|take|continue|go|walk|"
    r"proceed|arrive|you)\b)|,\s+(?=(?:turn|keep|bear|veer|make\s+an?\s+u)\b)",
    re.IGNORECASE)

_UNIT_M = {"km": 1000.0, "kilometer": 1000.0, "kilometre": 1000.0, "m": 1.0, "meter": 1.0, "metre": 1.0,
           "ft": 0.3048, "feet": 0.3048, "foot": 0.3048, "yd": 0.9144, "yard": 0.9144,
           "mi": 1609.344, "mile": 1609.344}


def _to_meters(num: str, unit: str) -> float:
    u = unit.lower()
    if u not in _UNIT_M:
        u = u.rstrip("s")
    return float(num.replace(",", "")) * _UNIT_M[u]


@dataclass(frozen=True)
class NormalizedLine:
    text: str
    annotations: tuple[tuple[str, str], ...] = ()


_CANON_LEAD = (r"(?:Head (?:[a-z]+(?:-[a-z]+)?|\d+(?:\.\d+)? degrees)|Turn (?:slight |sharp )?(?:left|right)"
               r"|Keep (?:left|right)|Make a U-turn)")
_CANON_MOTION = re.compile(
    rf"^(?P<lead>{_CANON_LEAD})(?:, along (?P<street>[^,]+?))?(?:, continue for (?P<dist>\d+\.\d) meters)?\.$")
_CANON_CONT = re.compile(r"^Continue(?: along (?P<street>.+?))? for (?P<dist>\d+\.\d) meters\.$")
_CANON_SPLIT = re.compile(r"(?<=\.)\s+(?=(?:Head|Turn|Keep|Make|Continue|Straight ahead)\b)")


def _canonical_sentence(s: str) -> bool:
    if s in (ARRIVAL_LINE, "Continue straight."):
        return True
    m = _CANON_MOTION.match(s)
    if m:
        lead = m.group("lead")
        if lead.startswith("Head ") and not lead.endswith(" degrees"):
            return lead[5:] in COMPASS16
        return True
    return bool(_CANON_CONT.match(s))


def is_canonical(line: str) -> bool:
    parts = _CANON_SPLIT.split(line)
    return bool(parts) and all(_canonical_sentence(p) for p in parts)


def _clean(raw: str) -> tuple[str, list[tuple[str, str]]]:
    notes: list[tuple[str, str]] = []
    s = raw.replace("’", "'").replace("“", '"').replace("”", '"')
    s = re.sub(r"[*_`#]+", "", s)
    prev = None
    while prev != s:
        prev = s
        s = _LIST_MARK_RE.sub("", s, count=1)

    def paren(m):
        inner = (m.group(1) if m.group(1) is not None else m.group(2)).strip()
        if inner:
            kind = "coordinates" if re.search(r"\d", inner) and re.search(r"[°.,]", inner) else "landmark"
            notes.append((kind, inner))
        return " "

    s = _PAREN_RE.sub(paren, s)

    def coord(m):
        notes.append(("coordinates", m.group(0).strip()))
        return " "

    s = _COORD_RE.sub(coord, s)
    s = re.sub(r"\s+", " ", s).strip()
    s = re.sub(r"\s+([,.;:!?])", r"\1", s)
    s = re.sub(r"^[,;:\s]+", "", s)
    return s, notes


def _sentence_case(s: str) -> str:
    s = s.strip().lower().rstrip(" ,;")
    if not s:
        return s
    if s[-1] not in ".!?:":
        s += "."
    head = s[0].upper()
    # 'ß'.upper() is 'SS'; keep such letters as they are so the result is stable
    return (head if len(head) == 1 else s[0]) + s[1:]


def _normalize_clause(clause: str, notes: list[tuple[str, str]]) -> str:
    arrival = bool(_ARRIVE_RE.search(clause))
    street = None
    sm = _STREET_RE.search(clause)
    scan = clause
    if sm:
        street = sm.group("street").rstrip(".").strip()
        scan = clause[:sm.start()] + " " * (sm.end() - sm.start()) + clause[sm.end():]
    lm = _LANDMARK_RE.search(scan)
    if lm:
        notes.append(("landmark", lm.group("mark").strip()))
        scan = scan[:lm.start()] + " " * (lm.end() - lm.start()) + scan[lm.end():]

    dm = _DIST_RE.search(scan)
    dist = _to_meters(dm.group("num"), dm.group("unit")) if dm else None
    if dist is not None and dist <= 0:
        dist = None

    candidates: list[tuple[int, int, Command]] = []
    for rx, pri in ((_UTURN_RE, 0), (_KEEP_RE, 1), (_BEAR_RE, 2), (_REL_RE, 2)):
        m = rx.search(scan)
        if not m:
            continue
        if rx is _UTURN_RE:
            cmd = Turn(TurnClass.U_TURN)
        elif rx is _KEEP_RE:
            cmd = Turn(TurnClass(f"keep-{m.group('side').lower()}"))
        elif rx is _BEAR_RE:
            cmd = Turn(TurnClass(f"slight-{m.group('side').lower()}"))
        else:
            mod = (m.group("m1") or m.group("m2") or "").lower()
            side = m.group("side").lower()
            if mod.startswith("slight") or mod == "soft":
                cmd = Turn(TurnClass(f"slight-{side}"))
            elif mod.startswith("sharp") or mod == "hard":
                cmd = Turn(TurnClass(f"sharp-{side}"))
            else:
                cmd = Turn(TurnClass(side))
        candidates.append((m.start(), pri, cmd))
    am = _ABS_TIGHT_RE.search(scan) or _ABS_BOUND_RE.search(scan)
    if am is None and (_CONT_RE.search(scan) or dist is not None):
        am = _ABS_LOOSE_RE.search(scan)
    if am:
        tok = am.group("dir")
        if re.match(r"\d", tok):
            cmd = Depart(normalize_bearing(float(re.match(r"\d+(?:\.\d+)?", tok).group(0))))
        else:
            w = compass_word(tok)
            cmd = Depart(COMPASS16[w], w) if w else None
        if cmd is not None:
            candidates.append((am.start("dir") if am.re is _ABS_LOOSE_RE else am.start(), 3, cmd))

    lead = min(candidates, key=lambda c: (c[0], c[1]))[2] if candidates else None
    is_cont = lead is None and (dist is not None or bool(_CONT_RE.search(scan)))

    pieces: list[str] = []
    if lead is not None:
        lead_pos = min(c[0] for c in candidates)
        if (dm is not None and dm.start() < lead_pos and not isinstance(lead, Depart)
                and _PRE_DIST_RE.search(scan[:dm.start()])):
            # "after 100 m, turn left": the distance is walked before the turn;
            # "after 100 m heading north" is a single northward leg
            pieces.append(render_line(None, Continue(float(_fmt_dist(dist)), street)))
            pieces.append(render_line(lead, None))
        else:
            cont = Continue(float(_fmt_dist(dist)), street) if dist is not None and float(_fmt_dist(dist)) > 0 else None
            line = render_line(lead, cont)
            if cont is None and street:
                line = line[:-1] + f", along {street}."
            pieces.append(line)
    elif is_cont:
        if dist is not None and float(_fmt_dist(dist)) > 0:
            pieces.append(render_line(None, Continue(float(_fmt_dist(dist)), street)))
        elif not arrival:
            pieces.append("Continue straight.")
    if arrival:
        pieces.append(ARRIVAL_LINE)
    if not pieces:
        return _sentence_case(clause)
    return " ".join(pieces)


def normalize_line(raw: str) -> NormalizedLine:
    """Canonicalize one raw instruction line; side information goes to annotations."""
    stripped = raw.strip()
    if is_canonical(stripped):
        return NormalizedLine(stripped)
    text, notes = _clean(stripped)
    if not text:
        return NormalizedLine("", tuple(notes))
    if is_canonical(text):
        return NormalizedLine(text, tuple(notes))
    clauses = [c for c in _CLAUSE_SPLIT_RE.split(text) if c and c.strip(" ,.")]
    out = [_normalize_clause(c.strip(), notes) for c in clauses]
    return NormalizedLine("\n".join(o for o in out if o), tuple(notes))


def normalize_text(raw: str) -> str:
    lines = []
    for line in raw.splitlines():
        n = normalize_line(line).text
        if n:
            lines.extend(n.split("\n"))
    return "\n".join(lines)


# --- parsing ------------------------------------------------------------------


def _parse_lead(lead: str) -> Command:
    if lead.startswith("Head "):
        rest = lead[5:]
        if rest.endswith(" degrees"):
            return Depart(normalize_bearing(float(rest[:-8])))
        return Depart(COMPASS16[rest], rest)
    if lead == "Make a U-turn":
        return Turn(TurnClass.U_TURN)
    if lead.startswith("Keep "):
        return Turn(TurnClass(f"keep-{lead[5:]}"))
    return Turn(TurnClass(lead[5:].replace(" ", "-")))


def parse_instruction(line: str) -> list[Command]:
    """Parse one canonical line into commands; raises :class:`UnparseableLine`."""
    line = line.strip()
    if not is_canonical(line):
        raise UnparseableLine(line)
    out: list[Command] = []
    for s in _CANON_SPLIT.split(line):
        if s == ARRIVAL_LINE:
            out.append(Arrive())
        elif s == "Continue straight.":
            out.append(Turn(TurnClass.STRAIGHT))
        elif (m := _CANON_CONT.match(s)) is not None:
            out.append(Continue(float(m.group("dist")), m.group("street")))
        else:
            m = _CANON_MOTION.match(s)
            out.append(_parse_lead(m.group("lead")))
            if m.group("dist") is not None:
                d = float(m.group("dist"))
                if d > 0:
                    out.append(Continue(d, m.group("street")))
    return out


@dataclass
class ParseDiagnostics:
    n_lines: int = 0
    unparseable: list[tuple[int, str]] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)
    annotations: list[tuple[int, str, str]] = field(default_factory=list)
    missing_initial_absolute_direction: bool = False
    n_motion: int = 0
    n_continue: int = 0

    @property
    def unparseable_ratio(self) -> float:
        return len(self.unparseable) / self.n_lines if self.n_lines else 0.0

    def to_dict(self) -> dict:
        return {
            "n_lines": self.n_lines,
            "unparseable": [list(x) for x in self.unparseable],
            "skipped": [list(x) for x in self.skipped],
            "missing_initial_absolute_direction": self.missing_initial_absolute_direction,
            "n_motion": self.n_motion,
            "n_continue": self.n_continue,
        }


@dataclass
class ParseResult:
    commands: list[Command]
    diagnostics: ParseDiagnostics


_HEADER_RE = re.compile(r":\s*$")
_START_LINE_RE = re.compile(r"^\s*(?:\**\s*)?(?:start(?:ing)?\s+point|start|origin|destination|end\s+point)\s*\**\s*:",
                            re.IGNORECASE)


def parse_instructions(text: str) -> ParseResult:
    """Normalize and parse a multi-line response.

    Numbering and markdown are stripped; header lines ("Here is the route:")
    and start-coordinate lines are skipped rather than counted as failures.
    """
    if not text or not text.strip():
        raise EmptyResponse("response is empty")
    diag = ParseDiagnostics()
    commands: list[Command] = []
    for idx, raw in enumerate(text.splitlines()):
        if not raw.strip():
            continue
        if _START_LINE_RE.match(raw) and not _DIST_RE.search(raw.split(":", 1)[1]):
            diag.skipped.append((idx, raw.strip()))
            continue
        norm = normalize_line(raw)
        diag.annotations.extend((idx, k, v) for k, v in norm.annotations)
        if not norm.text:
            diag.skipped.append((idx, raw.strip()))
            continue
        for piece in norm.text.split("\n"):
            if _HEADER_RE.search(piece) and not _DIST_RE.search(piece):
                diag.skipped.append((idx, raw.strip()))
                continue
            diag.n_lines += 1
            try:
                commands.extend(parse_instruction(piece))
            except UnparseableLine:
                diag.unparseable.append((idx, raw.strip()))
    seen_motion = False
    for i, c in enumerate(commands):
        if isinstance(c, Depart) and seen_motion:
            commands[i] = Face(c.bearing, c.word)
        if is_motion(c) and not seen_motion:
            seen_motion = True
            diag.missing_initial_absolute_direction = not isinstance(c, Depart)
    diag.n_motion = sum(is_motion(c) for c in commands)
    diag.n_continue = sum(isinstance(c, Continue) for c in commands)
    if not seen_motion:
        diag.missing_initial_absolute_direction = True
    return ParseResult(commands, diag)


def command_signature(c: Command) -> str:
    """Compact text form used in reports and diagnostics."""
    if isinstance(c, (Depart, Face)):
        name = type(c).__name__
        return f"{name}({c.word or _fmt_degrees(c.bearing)})"
    if isinstance(c, Turn):
        return f"Turn({c.turn.value})"
    if isinstance(c, Continue):
        return f"Continue({_fmt_dist(c.distance)})"
    return "Arrive"


def commands_from_lines(lines: Iterable[str]) -> list[Command]:
    return parse_instructions("\n".join(lines)).commands
