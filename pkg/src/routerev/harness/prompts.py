"""Guide and instruction prompts for the reversal task."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from ..geo import GeoPoint

GUIDE_TEMPLATE = """\
Generate a road network for {place} based on your knowledge.

The following task involves reversing a navigation route from destination (D) back to start point (S). \
Follow these key requirements:

1. Start with absolute direction. Use precise cardinal directions (North, South, East, West). \
Avoid ambiguous terms like "head backward".
2. No simple inversion. Understand the route thoroughly and create logical return directions \
rather than merely reversing steps.
3. Maintain consistent format. Use standard navigation terms ("head", "turn", "continue", "arrive") \
as in the original directions.
4. Reference landmarks. Include nearby points of interest (POI) to demonstrate geographical context.
5. Begin with absolute direction. The first instruction must specify an absolute direction (non-negotiable).

Example: {example}"""

DEFAULT_EXAMPLE = "......"


@dataclass(frozen=True)
class PromptBundle:
    route_id: str
    guide: str
    instruction: str

    def to_json(self) -> dict:
        return {"route_id": self.route_id, "guide": self.guide, "instruction": self.instruction}

    @classmethod
    def from_json(cls, d: dict) -> "PromptBundle":
        return cls(str(d["route_id"]), str(d["guide"]), str(d["instruction"]))


def _dms(value: float, pos: str, neg: str) -> str:
    tenths = round(abs(value) * 36000)  # tenths of an arc-second
    deg, rest = divmod(tenths, 36000)
    minutes, sec10 = divmod(rest, 600)
    sec = f"{sec10 // 10}" if sec10 % 10 == 0 else f"{sec10 // 10}.{sec10 % 10}"
    return f"{deg}°{minutes}'{sec}''{pos if value >= 0 else neg}"


def format_dms(p: GeoPoint) -> str:
    """``43°38'47''N, 79°26'11.5''W`` style coordinate, seconds to 0.1."""
    return f"{_dms(p.lat, 'N', 'S')}, {_dms(p.lon, 'E', 'W')}"


_DMS_RE = re.compile(r"(\d+)\s*°\s*(\d+)\s*['′]\s*(\d+(?:\.\d+)?)\s*(?:''|″|\")\s*([NSEW])")


def parse_dms(text: str) -> GeoPoint:
    """Inverse of :func:`format_dms`; accepts either hemisphere order."""
    found = _DMS_RE.findall(text)
    if len(found) != 2:
        raise ValueError(f"expected two DMS coordinates in {text!r}")
    vals = {}
    for d, m, s, h in found:
        v = int(d) + int(m) / 60 + float(s) / 3600
        axis = "lat" if h in "NS" else "lon"
        if axis in vals:
            raise ValueError(f"two {axis} coordinates in {text!r}")
        vals[axis] = -v if h in "SW" else v
    return GeoPoint(vals["lat"], vals["lon"])


def find_start_point(text: str) -> GeoPoint | None:
    """Start coordinate from a ``Start Point:`` line, if the text has one."""
    for line in text.splitlines():
        if line.strip().lower().startswith("start point:"):
            return parse_dms(line)
    return None


def guide_prompt(place: str, example: str | None = None) -> str:
    return GUIDE_TEMPLATE.format(place=place, example=example or DEFAULT_EXAMPLE)


def instruction_prompt(start: GeoPoint, lines) -> str:
    lines = list(lines)
    if not lines:
        raise ValueError("record has no instructions")
    body = "\n".join(f"{i}. {s}" for i, s in enumerate(lines, 1))
    return f"Start Point: {format_dms(start)}\n\n{body}"


def build_prompts(record, city, example: str | None = None) -> PromptBundle:
    """Prompt pair for one route; ``city`` is a CitySpec or a plain place label."""
    place = city if isinstance(city, str) else city.label
    return PromptBundle(record.id, guide_prompt(place, example), instruction_prompt(record.start, record.instructions))


def example_route() -> dict:
    """Bundled sample route (Toronto) used by selftest and docs."""
    raw = resources.files("routerev").joinpath("data/example_route.json").read_text(encoding="utf-8")
    return json.loads(raw)
