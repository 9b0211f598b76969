"""Per-trial scoring, consistency and confidence measures, and disorder detectors."""

from __future__ import annotations

import bisect
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import (CoincidentPoints, DegenerateRoute, EmptyCommandSequence, EmptyResponse, InsufficientTrials,
                      MissingInitialBearing, NetDisplacementTooSmall, NoDirectionTokens)
from ..geo import GeoPoint, Polyline, angular_difference, haversine_distance, initial_bearing
from ..graph import RoadGraph
from ..instructions import (COMPASS16, OPPOSITE_COMPASS, Arrive, Command, Continue, Depart, Face, ParseDiagnostics,
                            Turn, parse_instructions)
from ..metrics import (DEFAULT_PARAMS, DEFAULT_WEIGHTS, MetricParams, SimilarityWeights, deviation_angle,
                       return_success, similarity)
from ..pathbuilder import SNAP_CAP_M, BuiltPath, connect_path, dead_reckon
from .clients import ModelResponse


# --- misalignment -------------------------------------------------------------


@dataclass(frozen=True)
class MisalignmentFlags:
    missing_initial_absolute_direction: bool = False
    unparseable_lines: bool = False
    zero_motion_commands: bool = False
    non_navigational: bool = False

    @property
    def misaligned(self) -> bool:
        return (self.missing_initial_absolute_direction or self.unparseable_lines
                or self.zero_motion_commands or self.non_navigational)

    def to_dict(self) -> dict:
        return {
            "missing_initial_absolute_direction": self.missing_initial_absolute_direction,
            "unparseable_lines": self.unparseable_lines,
            "zero_motion_commands": self.zero_motion_commands,
            "non_navigational": self.non_navigational,
            "misaligned": self.misaligned,
        }


ALL_FLAGS = MisalignmentFlags(True, True, True, True)


def detect_misalignment(resp: ModelResponse | str, diag: ParseDiagnostics | None = None,
                        unparseable_ratio: float = 0.2) -> MisalignmentFlags:
    """Validity flags for a response; ``diag`` is parsed from the text when omitted."""
    text = resp.text if isinstance(resp, ModelResponse) else resp
    if diag is None:
        try:
            diag = parse_instructions(text).diagnostics
        except EmptyResponse:
            return ALL_FLAGS
    return MisalignmentFlags(
        missing_initial_absolute_direction=diag.missing_initial_absolute_direction,
        unparseable_lines=diag.n_lines == 0 or diag.unparseable_ratio > unparseable_ratio,
        zero_motion_commands=diag.n_motion == 0,
        non_navigational=diag.n_continue == 0,
    )


# --- semantic inversion -------------------------------------------------------


def _invert(c: Command) -> Command:
    if isinstance(c, (Depart, Face)):
        if c.word is not None:
            w = OPPOSITE_COMPASS[c.word]
            return Depart(COMPASS16[w], w)
        return Depart((c.bearing + 180.0) % 360.0)
    if isinstance(c, Turn):
        return Turn(c.turn.mirrored)
    return c


def naive_inversion(commands: Sequence[Command]) -> list[Command]:
    """Steps in reverse order with every direction word swapped for its opposite.

    A step is a maneuver (Depart or Turn) together with the Continue that
    follows it. Distances are kept; the arrival stays last.
    """
    steps: list[list[Command]] = []
    for c in commands:
        if isinstance(c, Arrive):
            continue
        if isinstance(c, Continue) and steps and not any(isinstance(x, Continue) for x in steps[-1]):
            steps[-1].append(c)
        else:
            steps.append([c])
    out: list[Command] = []
    for step in reversed(steps):
        out.extend(_invert(c) for c in step)
    out.append(Arrive())
    return out


def _same(a: Command, b: Command, dist_tol: float) -> bool:
    if isinstance(a, (Depart, Face)) and isinstance(b, (Depart, Face)):
        return angular_difference(a.bearing, b.bearing) < 1e-6
    if isinstance(a, Continue) and isinstance(b, Continue):
        return abs(a.distance - b.distance) <= dist_tol * max(a.distance, b.distance)
    return a == b


def inversion_ratio(forward: Sequence[Command], response: Sequence[Command], dist_tol: float = 0.1) -> float:
    naive = naive_inversion(forward)
    if not response:
        return 0.0
    hits = sum(_same(a, b, dist_tol) for a, b in zip(response, naive))
    return hits / max(len(response), len(naive))


def detect_semantic_inversion(record, response: Sequence[Command], threshold: float = 0.8,
                              dist_tol: float = 0.1) -> tuple[bool, float]:
    forward = record.commands() if hasattr(record, "commands") else list(record)
    ratio = inversion_ratio(forward, response, dist_tol)
    return ratio >= threshold, ratio


# --- disorientation -----------------------------------------------------------

_QUADRANTS = ("northeast", "southeast", "southwest", "northwest")
_CARDINALS = ("north", "east", "south", "west")


def sector8(bearing: float, cardinal_band: float = 11.0) -> str:
    """Approximate direction: a cardinal within ``cardinal_band`` of its axis, else the quadrant."""
    b = bearing % 360.0
    for i, name in enumerate(_CARDINALS):
        if angular_difference(b, 90.0 * i) < cardinal_band:
            return name
    return _QUADRANTS[int(b // 90.0)]


def net_bearing_oracle(commands: Sequence[Command], start: GeoPoint, min_displacement: float = 20.0,
                       cardinal_band: float = 11.0) -> str:
    end = dead_reckon(commands, start).position
    if haversine_distance(start, end) < min_displacement:
        raise NetDisplacementTooSmall("net displacement below the grading threshold")
    return sector8(initial_bearing(start, end), cardinal_band)


# --- confidence ---------------------------------------------------------------

_DIRECTION_RE = re.compile(
    r"\b(?:turn|head|keep|bear|veer|go|walk|continue|proceed)\s+"
    r"(?:(?:slight(?:ly)?|sharp(?:ly)?|to|the|your|due|towards?|a)\s+)*"
    r"(?P<dir>north[\s-]?east|north[\s-]?west|south[\s-]?east|south[\s-]?west|north|south|east|west|"
    r"left|right|straight)\b",
    re.IGNORECASE)


def direction_probabilities(resp: ModelResponse) -> list[float]:
    """Probability of the token carrying each direction word.

    When a word spans several tokens, the token holding its first character
    is used.
    """
    if not resp.logprobs:
        raise NoDirectionTokens("response carries no token log-probabilities")
    starts: list[int] = []
    pos = 0
    for tok, _ in resp.logprobs:
        starts.append(pos)
        pos += len(tok)
    text = "".join(t for t, _ in resp.logprobs)
    probs = []
    for m in _DIRECTION_RE.finditer(text):
        k = bisect.bisect_right(starts, m.start("dir")) - 1
        while k > 0 and not resp.logprobs[k][0]:
            k -= 1
        probs.append(math.exp(resp.logprobs[k][1]))
    if not probs:
        raise NoDirectionTokens("no direction words found in the token stream")
    return probs


def confidence(resp: ModelResponse) -> float | None:
    """Mean direction-word probability on a 0-100 scale, or None when unavailable."""
    try:
        probs = direction_probabilities(resp)
    except NoDirectionTokens:
        return None
    return round(100.0 * math.fsum(probs) / len(probs), 10)


# --- robustness ---------------------------------------------------------------


def sigma_from_similarities(sims: Sequence[float]) -> float:
    """Standard deviation of pairwise similarities around their mean (population form)."""
    if not sims:
        raise InsufficientTrials("no response pairs")
    mean = math.fsum(sims) / len(sims)
    return math.sqrt(math.fsum((s - mean) ** 2 for s in sims) / len(sims))


@dataclass(frozen=True)
class Dispersion:
    sigma: float
    n_used: int
    n_excluded: int
    pair_similarities: tuple[float, ...]


def dispersion(geometries: Sequence[Polyline | None], weights: SimilarityWeights = DEFAULT_WEIGHTS,
               params: MetricParams = DEFAULT_PARAMS) -> Dispersion:
    used = [g for g in geometries if g is not None and len(g) >= 2]
    if len(used) < 2:
        raise InsufficientTrials(f"need two buildable trials, got {len(used)}")
    sims = []
    for i in range(len(used) - 1):
        for j in range(i + 1, len(used)):
            sims.append(similarity(used[i], used[j], weights, params).value)
    return Dispersion(sigma_from_similarities(sims), len(used), len(geometries) - len(used), tuple(sims))


def normalize_robustness(sigmas: Sequence[float]) -> list[float]:
    """Min-max map of sigma onto R in [0, 100], higher meaning more consistent."""
    if not sigmas:
        return []
    lo, hi = min(sigmas), max(sigmas)
    if hi - lo <= 1e-12:
        return [100.0] * len(sigmas)
    return [100.0 * (1.0 - (s - lo) / (hi - lo)) for s in sigmas]


def robustness(geometries: Sequence[Polyline | None], sigma_min: float | None = None,
               sigma_max: float | None = None, **kw) -> tuple[float, float]:
    """(R, sigma) for one trial set; without run extrema a lone set maps to R = 100."""
    d = dispersion(geometries, **kw)
    lo = d.sigma if sigma_min is None else sigma_min
    hi = d.sigma if sigma_max is None else sigma_max
    if hi - lo <= 1e-12:
        return 100.0, d.sigma
    return 100.0 * (1.0 - (d.sigma - lo) / (hi - lo)), d.sigma


# --- trial evaluation ---------------------------------------------------------


@dataclass
class TrialResult:
    model: str
    route_id: str
    trial: int
    difficulty: str | None
    similarity: float
    returned: bool
    deviation: float | None
    built: bool
    flags: MisalignmentFlags
    inversion: bool
    inversion_ratio: float
    confidence: float | None
    components: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    endpoint: tuple[float, float] | None = None
    build_diagnostics: dict = field(default_factory=dict)
    error: str | None = None
    geometry: Polyline | None = field(default=None, repr=False)

    @property
    def misaligned(self) -> bool:
        return self.flags.misaligned or not self.built

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "route_id": self.route_id,
            "trial": self.trial,
            "difficulty": self.difficulty,
            "similarity": self.similarity,
            "returned": self.returned,
            "deviation": self.deviation,
            "built": self.built,
            "misaligned": self.misaligned,
            "flags": self.flags.to_dict(),
            "inversion": self.inversion,
            "inversion_ratio": self.inversion_ratio,
            "confidence": self.confidence,
            "components": self.components,
            "metrics": self.metrics,
            "endpoint": list(self.endpoint) if self.endpoint else None,
            "build": self.build_diagnostics,
            "error": self.error,
        }


def evaluate_trial(record, resp: ModelResponse, g: RoadGraph, *, weights: SimilarityWeights = DEFAULT_WEIGHTS,
                   params: MetricParams = DEFAULT_PARAMS, snap_cap: float = SNAP_CAP_M,
                   inversion_threshold: float = 0.8, inversion_distance_tol: float = 0.1,
                   unparseable_ratio: float = 0.2, deflections: dict | None = None) -> TrialResult:
    """Score one response against the reversed ground-truth route.

    Failures never raise: a response that cannot be built scores 0 and
    does not count as returned. A response without an initial absolute
    direction is built from a north heading and flagged.
    """
    truth = record.geometry.reversed()
    conf = confidence(resp)
    base = dict(model=resp.model, route_id=resp.route_id, trial=resp.trial, difficulty=record.difficulty,
                confidence=conf)
    try:
        parsed = parse_instructions(resp.text)
    except EmptyResponse as exc:
        return TrialResult(similarity=0.0, returned=False, deviation=None, built=False, flags=ALL_FLAGS,
                           inversion=False, inversion_ratio=0.0, error=str(exc), **base)
    flags = detect_misalignment(resp, parsed.diagnostics, unparseable_ratio)
    inv, ratio = detect_semantic_inversion(record, parsed.commands, inversion_threshold, inversion_distance_tol)
    base.update(flags=flags, inversion=inv, inversion_ratio=ratio)
    try:
        kw = {} if deflections is None else {"deflections": deflections}
        state = dead_reckon(parsed.commands, record.end, require_depart=False, **kw)
        if len(state.waypoints) < 2:
            raise DegenerateRoute("instructions never move away from the start")
        bp: BuiltPath = connect_path(state.waypoints, g, snap_cap)
        if len(bp.geometry) < 2:
            raise DegenerateRoute("built geometry collapses to a single point")
    except (EmptyCommandSequence, DegenerateRoute, MissingInitialBearing) as exc:
        return TrialResult(similarity=0.0, returned=False, deviation=None, built=False, error=str(exc), **base)
    score = similarity(bp.geometry, truth, weights, params)
    try:
        dev = deviation_angle(bp, record)
    except CoincidentPoints:
        dev = None
    end = bp.geometry[-1]
    return TrialResult(
        similarity=score.value,
        returned=return_success(bp, record.start, params.return_tol),
        deviation=dev,
        built=True,
        components=score.components,
        metrics=score.metrics.to_dict(),
        endpoint=(end.lat, end.lon),
        build_diagnostics=bp.diagnostics,
        geometry=bp.geometry,
        **base,
    )


def empty_response(model: str, route_id: str, trial: int) -> ModelResponse:
    return ModelResponse(model, route_id, trial, "")


def group_trials(results: Iterable[TrialResult]) -> dict[tuple[str, str], list[TrialResult]]:
    out: dict[tuple[str, str], list[TrialResult]] = {}
    for r in results:
        out.setdefault((r.model, r.route_id), []).append(r)
    for v in out.values():
        v.sort(key=lambda r: r.trial)
    return dict(sorted(out.items()))
