"""Reference responders that need no model: the true reversal and the naive inversion."""

from __future__ import annotations

from typing import Iterable

from ..graph import RoadGraph
from ..instructions import render_commands, render_instructions
from .clients import ModelResponse
from .evaluate import naive_inversion

SELF_ORACLE = "self-oracle"
NAIVE_INVERSION = "naive-inversion"


def reversed_instructions(record, g: RoadGraph | None = None) -> list[str]:
    """Instructions rendered from the reversed ground-truth geometry."""
    return render_instructions(record.geometry.reversed(), g).lines


def naive_instructions(record) -> list[str]:
    return render_commands(naive_inversion(record.commands()))


def synthetic_responses(records: Iterable, kind: str, n_trials: int = 6,
                        g: RoadGraph | None = None) -> list[ModelResponse]:
    """``n_trials`` identical responses per record from the named responder."""
    if kind == SELF_ORACLE:
        make = lambda r: reversed_instructions(r, g)  # noqa: E731
    elif kind == NAIVE_INVERSION:
        make = naive_instructions
    else:
        raise ValueError(f"unknown synthetic responder {kind!r}")
    out = []
    for r in records:
        text = "\n".join(make(r))
        out.extend(ModelResponse(kind, r.id, t, text) for t in range(n_trials))
    return out
