"""Benchmark route generation, turn-density complexity and the three-tier split."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegenerateExtrema, GraphTooSmall, InsufficientRecords, ParseError, Unreachable
from .geo import M_PER_DEG, GeoPoint, Polyline, destination_point, path_length
from .graph import RoadGraph, node_path_to_polyline
from .instructions import DEFAULT_BANDS, TurnBands, normalize_line, parse_instructions, render_instructions

TIERS = ("easy", "medium", "hard")
MIN_LENGTH_M = 500.0
MAX_LENGTH_M = 2500.0


@dataclass(frozen=True)
class CitySpec:
    name: str
    center: GeoPoint
    sigma: float = 2000.0
    r_min: float = 400.0
    r_max: float = 2600.0
    country: str | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")

    @property
    def label(self) -> str:
        return f"{self.name}, {self.country}" if self.country else self.name


@dataclass
class RouteRecord:
    id: str
    city: str
    start: GeoPoint
    end: GeoPoint
    geometry: Polyline
    instructions: tuple[str, ...]
    length_m: float
    turns: int
    complexity: float | None = None
    difficulty: str | None = None

    @property
    def density(self) -> float:
        return self.turns / self.length_m

    def commands(self):
        return parse_instructions("\n".join(self.instructions)).commands

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "city": self.city,
            "start": [self.start.lat, self.start.lon],
            "end": [self.end.lat, self.end.lon],
            "geometry": self.geometry.to_lists(),
            "instructions": list(self.instructions),
            "length_m": self.length_m,
            "turns": self.turns,
            "complexity": self.complexity,
            "difficulty": self.difficulty,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RouteRecord":
        try:
            rec = cls(
                id=str(d["id"]),
                city=str(d["city"]),
                start=GeoPoint(*map(float, d["start"])),
                end=GeoPoint(*map(float, d["end"])),
                geometry=Polyline(tuple(map(float, p)) for p in d["geometry"]),
                instructions=tuple(str(s) for s in d["instructions"]),
                length_m=float(d["length_m"]),
                turns=int(d["turns"]),
                complexity=None if d.get("complexity") is None else float(d["complexity"]),
                difficulty=d.get("difficulty"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid route record: {exc}") from exc
        if rec.difficulty is not None and rec.difficulty not in TIERS:
            raise ParseError(f"unknown difficulty {rec.difficulty!r}")
        return rec


@dataclass(frozen=True)
class Rejection:
    reason: str


# --- sampling -----------------------------------------------------------------


def sample_start(city: CitySpec, rng: np.random.Generator) -> GeoPoint:
    dx, dy = rng.normal(0.0, city.sigma, size=2)
    lat0, lon0 = city.center.lat, city.center.lon
    return GeoPoint(lat0 + dy / M_PER_DEG, lon0 + dx / (M_PER_DEG * math.cos(math.radians(lat0))))


def sample_end(start: GeoPoint, r_min: float, r_max: float, rng: np.random.Generator) -> GeoPoint:
    """Area-uniform point in the annulus r_min <= r <= r_max around ``start``."""
    if not r_min < r_max:
        raise ValueError("need r_min < r_max")
    u, v = rng.random(2)
    r = math.sqrt(u * (r_max ** 2 - r_min ** 2) + r_min ** 2)
    return destination_point(start, 360.0 * v, r)


# --- records ------------------------------------------------------------------


def generate_record(S: GeoPoint, D: GeoPoint, g: RoadGraph, *, rid: str = "", city: str = "",
                    snap_cap: float = 250.0, min_length: float = MIN_LENGTH_M,
                    max_length: float = MAX_LENGTH_M, bands: TurnBands = DEFAULT_BANDS) -> RouteRecord | Rejection:
    s_node, s_off = g.nearest_distance(S)
    d_node, d_off = g.nearest_distance(D)
    if s_off > snap_cap or d_off > snap_cap:
        return Rejection("off_network")
    if s_node.id == d_node.id:
        return Rejection("coincident")
    try:
        res = g.shortest_path(s_node.id, d_node.id)
    except Unreachable:
        return Rejection("unreachable")
    geom = node_path_to_polyline(g, res.nodes)
    length = path_length(geom)
    if not min_length <= length <= max_length:
        return Rejection("length")
    iset = render_instructions(geom, g, bands=bands)
    lines = tuple(normalize_line(s).text for s in iset.lines)
    return RouteRecord(rid, city, geom[0], geom[-1], geom, lines, length, iset.n_turns)


def complexity(n_t: int, l: float, d_min: float, d_max: float, orientation: str = "ascending") -> float:
    """Turn-density score in [0, 100].

    ``literal`` gives 100 to the sparsest route; ``ascending`` (default)
    flips it so denser routes score higher.
    """
    if d_max == d_min:
        raise DegenerateExtrema("turn-density extrema coincide")
    c = (d_max - n_t / l) / (d_max - d_min) * 100.0
    if orientation == "ascending":
        c = 100.0 - c
    elif orientation != "literal":
        raise ValueError(f"unknown orientation {orientation!r}")
    return min(100.0, max(0.0, c))


def tier_of(score: float, buffer: float = 5.0, orientation: str = "ascending") -> str | None:
    """Tier for a complexity score, or None inside a boundary buffer."""
    s = score if orientation == "ascending" else 100.0 - score
    bounds = (100.0 / 3.0, 200.0 / 3.0)
    if any(abs(s - b) <= buffer for b in bounds):
        return None
    if s < bounds[0]:
        return "easy"
    return "medium" if s < bounds[1] else "hard"


@dataclass
class Dataset:
    records: list[RouteRecord]
    seed: int
    d_min: float
    d_max: float
    city: str = ""
    orientation: str = "ascending"
    attempts: int = 0
    rejections: dict[str, int] = field(default_factory=dict)

    def labeled(self) -> list[RouteRecord]:
        return [r for r in self.records if r.difficulty is not None]

    def tier(self, name: str) -> list[RouteRecord]:
        return [r for r in self.records if r.difficulty == name]

    def summary(self) -> dict:
        tiers = {}
        for t in TIERS:
            rs = self.tier(t)
            tiers[t] = {
                "count": len(rs),
                "avg_length_m": float(np.mean([r.length_m for r in rs])) if rs else None,
                "avg_turns": float(np.mean([r.turns for r in rs])) if rs else None,
                "avg_turn_density_per_km": float(np.mean([r.density for r in rs]) * 1000) if rs else None,
            }
        return {
            "city": self.city,
            "seed": self.seed,
            "records": len(self.records),
            "discarded_in_buffer": sum(r.difficulty is None for r in self.records),
            "attempts": self.attempts,
            "rejections": dict(sorted(self.rejections.items())),
            "d_min": self.d_min,
            "d_max": self.d_max,
            "orientation": self.orientation,
            "tiers": tiers,
        }


def split(records: Sequence[RouteRecord], *, buffer: float = 5.0, orientation: str = "ascending",
          d_min: float | None = None, d_max: float | None = None) -> list[RouteRecord]:
    """Score and label records in place; buffered records get difficulty None."""
    if not records:
        raise InsufficientRecords("no records to split")
    dens = [r.density for r in records]
    d_min = min(dens) if d_min is None else d_min
    d_max = max(dens) if d_max is None else d_max
    for r in records:
        r.complexity = complexity(r.turns, r.length_m, d_min, d_max, orientation)
        r.difficulty = tier_of(r.complexity, buffer, orientation)
    for t in TIERS:
        if not any(r.difficulty == t for r in records):
            raise InsufficientRecords(f"tier {t!r} is empty")
    return list(records)


# --- generation ---------------------------------------------------------------

_WORKER_GRAPH: RoadGraph | None = None


def _init_worker(g: RoadGraph) -> None:
    global _WORKER_GRAPH
    _WORKER_GRAPH = g


def _candidate(args) -> RouteRecord | Rejection:
    k, city, seed, opts = args
    return _candidate_on(_WORKER_GRAPH, k, city, seed, opts)


def _candidate_on(g: RoadGraph, k: int, city: CitySpec, seed: int, opts: dict) -> RouteRecord | Rejection:
    # one generator per candidate index: results do not depend on worker count
    rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
    S = sample_start(city, rng)
    D = sample_end(S, city.r_min, city.r_max, rng)
    return generate_record(S, D, g, city=city.name, **opts)


def _candidates(g: RoadGraph, city: CitySpec, seed: int, opts: dict, jobs: int,
                chunk: int = 64) -> Iterator[RouteRecord | Rejection]:
    k = 0
    if jobs <= 1:
        while True:
            yield _candidate_on(g, k, city, seed, opts)
            k += 1
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(g,)) as pool:
        while True:
            batch = [(k + i, city, seed, opts) for i in range(chunk * jobs)]
            yield from pool.map(_candidate, batch, chunksize=chunk)
            k += len(batch)


def generate_dataset(city: CitySpec, n_target: int, seed: int, g: RoadGraph, *, jobs: int = 1,
                     buffer: float = 5.0, orientation: str = "ascending", snap_cap: float = 250.0,
                     min_length: float = MIN_LENGTH_M, max_length: float = MAX_LENGTH_M,
                     bands: TurnBands = DEFAULT_BANDS, split_tiers: bool = True) -> Dataset:
    """Rejection-sample ``n_target`` routes and split them into tiers.

    Raises GraphTooSmall when fewer than 0.1% of the first ``10 * n_target``
    candidates are accepted, or when ``1000 * n_target`` candidates were
    not enough.
    """
    if n_target < 1:
        raise ValueError("n_target must be positive")
    opts = dict(snap_cap=snap_cap, min_length=min_length, max_length=max_length, bands=bands)
    accepted: list[RouteRecord] = []
    rejections: dict[str, int] = {}
    attempts = 0
    probe, cap = 10 * n_target, 1000 * n_target
    gen = _candidates(g, city, seed, opts, jobs)
    try:
        for out in gen:
            attempts += 1
            if isinstance(out, Rejection):
                rejections[out.reason] = rejections.get(out.reason, 0) + 1
            else:
                out.id = f"{city.name}-{len(accepted):05d}"
                accepted.append(out)
                if len(accepted) == n_target:
                    break
            if attempts == probe and len(accepted) < 0.001 * attempts:
                raise GraphTooSmall(f"only {len(accepted)} of {attempts} candidate routes accepted")
            if attempts >= cap:
                raise GraphTooSmall(f"{attempts} candidates yielded only {len(accepted)} routes")
    finally:
        gen.close()
    dens = [r.density for r in accepted]
    d_min, d_max = min(dens), max(dens)
    if d_min == d_max:
        raise DegenerateExtrema("all routes have the same turn density")
    if split_tiers:
        split(accepted, buffer=buffer, orientation=orientation, d_min=d_min, d_max=d_max)
    else:
        for r in accepted:
            r.complexity = complexity(r.turns, r.length_m, d_min, d_max, orientation)
    return Dataset(accepted, seed, d_min, d_max, city.name, orientation, attempts, rejections)


# --- JSONL --------------------------------------------------------------------


def dumps_record(r: RouteRecord) -> str:
    return json.dumps(r.to_json(), ensure_ascii=False, separators=(", ", ": "))


def write_records(records: Iterable[RouteRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(dumps_record(r) + "\n")


def read_records(path: str | Path) -> list[RouteRecord]:
    out: list[RouteRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(RouteRecord.from_json(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            except ParseError as exc:
                raise ParseError(exc.message, line=lineno) from exc
    return out


def records_geojson(records: Iterable[RouteRecord]) -> dict:
    feats = []
    for r in records:
        feats.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[p.lon, p.lat] for p in r.geometry]},
            "properties": {"id": r.id, "length_m": r.length_m, "turns": r.turns,
                           "complexity": r.complexity, "difficulty": r.difficulty},
        })
    return {"type": "FeatureCollection", "features": feats}
