"""Run-level scoring and aggregation into per-model, per-tier tables."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import InsufficientTrials
from ..graph import RoadGraph
from ..metrics import DEFAULT_PARAMS, DEFAULT_WEIGHTS, MetricParams, SimilarityWeights
from .clients import ModelResponse
from .evaluate import TrialResult, dispersion, empty_response, evaluate_trial, group_trials, normalize_robustness

TIER_ORDER = ("easy", "medium", "hard", "unlabeled", "all")


def mean_se(values: Sequence[float]) -> tuple[float | None, float | None]:
    """Mean and standard error (sample std / sqrt(n)); SE is None below two values."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    n = len(vals)
    m = math.fsum(vals) / n
    if n < 2:
        return m, None
    var = math.fsum((v - m) ** 2 for v in vals) / (n - 1)
    return m, math.sqrt(var) / math.sqrt(n)


@dataclass
class TrialSetSummary:
    model: str
    route_id: str
    difficulty: str | None
    sigma: float | None
    n_used: int
    n_excluded: int
    robustness: float | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunResult:
    trials: list[TrialResult]
    sets: list[TrialSetSummary]
    uncovered: list[dict] = field(default_factory=list)
    sigma_min: float | None = None
    sigma_max: float | None = None


_WORKER: dict = {}


def _init(g, kw):
    _WORKER["g"] = g
    _WORKER["kw"] = kw


def _eval(args):
    record, resp = args
    return evaluate_trial(record, resp, _WORKER["g"], **_WORKER["kw"])


def score_run(records: Sequence, responses: Iterable[ModelResponse], g: RoadGraph, *, n_trials: int = 6,
              models: Sequence[str] | None = None, jobs: int = 1, weights: SimilarityWeights = DEFAULT_WEIGHTS,
              params: MetricParams = DEFAULT_PARAMS, **trial_kw) -> RunResult:
    """Evaluate every (model, route, trial) and compute run-normalized robustness.

    Missing trials are listed in ``uncovered`` and scored as empty responses.
    """
    by_key: dict[tuple[str, str], dict[int, ModelResponse]] = {}
    for r in responses:
        by_key.setdefault((r.model, r.route_id), {})[r.trial] = r
    model_names = sorted(set(models or []) | {m for m, _ in by_key}) or ["unknown"]
    rec_ids = {rec.id for rec in records}
    uncovered: list[dict] = []
    jobs_list = []
    for model in model_names:
        for rec in records:
            got = by_key.get((model, rec.id), {})
            missing = [t for t in range(n_trials) if t not in got]
            if missing:
                uncovered.append({"model": model, "route_id": rec.id, "missing_trials": missing})
            for t in range(n_trials):
                jobs_list.append((rec, got.get(t) or empty_response(model, rec.id, t)))
    stray = sorted({rid for _, rid in by_key if rid not in rec_ids})
    for rid in stray:
        uncovered.append({"route_id": rid, "unknown_route": True})

    kw = dict(weights=weights, params=params, **trial_kw)
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init, initargs=(g, kw)) as pool:
            trials = list(pool.map(_eval, jobs_list, chunksize=8))
    else:
        trials = [evaluate_trial(rec, resp, g, **kw) for rec, resp in jobs_list]

    diff = {rec.id: rec.difficulty for rec in records}
    sets = []
    for (model, rid), ts in group_trials(trials).items():
        try:
            d = dispersion([t.geometry for t in ts], weights, params)
            sets.append(TrialSetSummary(model, rid, diff.get(rid), d.sigma, d.n_used, d.n_excluded))
        except InsufficientTrials:
            n_used = sum(t.built for t in ts)
            sets.append(TrialSetSummary(model, rid, diff.get(rid), None, n_used, len(ts) - n_used))
    sig = [s.sigma for s in sets if s.sigma is not None]
    for s, r in zip([s for s in sets if s.sigma is not None], normalize_robustness(sig)):
        s.robustness = r
    return RunResult(trials, sets, uncovered, min(sig) if sig else None, max(sig) if sig else None)


def aggregate(run: RunResult) -> dict:
    """Per (model, tier) table plus run metadata; the 'all' tier pools every trial."""
    if not run.trials:
        raise ValueError("no trial results to aggregate")
    rows = []
    models = sorted({t.model for t in run.trials})
    for model in models:
        mt = [t for t in run.trials if t.model == model]
        ms = [s for s in run.sets if s.model == model]
        for tier in TIER_ORDER:
            if tier == "all":
                tt, ss = mt, ms
            else:
                key = None if tier == "unlabeled" else tier
                tt = [t for t in mt if t.difficulty == key]
                ss = [s for s in ms if s.difficulty == key]
            if not tt:
                continue
            rows.append(_row(model, tier, tt, ss))
    return {
        "rows": rows,
        "run": {
            "n_trials": len(run.trials),
            "n_trial_sets": len(run.sets),
            "sigma_min": run.sigma_min,
            "sigma_max": run.sigma_max,
            "uncovered": run.uncovered,
        },
    }


def _row(model: str, tier: str, tt: list[TrialResult], ss: list[TrialSetSummary]) -> dict:
    n = len(tt)
    built = [t for t in tt if t.built]
    sim, sim_se = mean_se([t.similarity for t in tt])
    sim_b, _ = mean_se([t.similarity for t in built])
    dev, dev_se = mean_se([t.deviation for t in tt])
    hd, hd_se = mean_se([t.metrics.get("hausdorff") for t in built])
    lr, lr_se = mean_se([t.metrics.get("length_ratio") for t in built])
    ji, ji_se = mean_se([t.metrics.get("jaccard") for t in built])
    rob, _ = mean_se([s.robustness for s in ss])
    sig, _ = mean_se([s.sigma for s in ss])
    conf = [t.confidence for t in tt if t.confidence is not None]
    return {
        "model": model,
        "difficulty": tier,
        "n_trials": n,
        "n_built": len(built),
        "return_rate": 100.0 * sum(t.returned for t in tt) / n,
        "similarity": sim,
        "similarity_se": sim_se,
        "similarity_buildable": sim_b,
        "deviation": dev,
        "deviation_se": dev_se,
        "hausdorff": hd,
        "hausdorff_se": hd_se,
        "length_ratio": lr,
        "length_ratio_se": lr_se,
        "jaccard": ji,
        "jaccard_se": ji_se,
        "robustness": rob,
        "sigma": sig,
        "confidence": math.fsum(conf) / len(conf) if conf else None,
        "misalignment": 100.0 * sum(t.misaligned for t in tt) / n,
        "missing_initial_direction": 100.0 * sum(t.flags.missing_initial_absolute_direction for t in tt) / n,
        "inversion_rate": 100.0 * sum(t.inversion for t in tt) / n,
    }


CSV_COLUMNS = ("model", "difficulty", "n_trials", "n_built", "return_rate", "similarity", "similarity_se",
               "similarity_buildable", "deviation", "deviation_se", "hausdorff", "hausdorff_se", "length_ratio",
               "length_ratio_se", "jaccard", "jaccard_se", "robustness", "sigma", "confidence", "misalignment",
               "missing_initial_direction", "inversion_rate")


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in report["rows"]:
        w.writerow(["N/A" if row[c] is None else (f"{row[c]:.6f}" if isinstance(row[c], float) else row[c])
                    for c in CSV_COLUMNS])
    return buf.getvalue()


def report_json(report: dict, run: RunResult | None = None) -> str:
    out = dict(report)
    if run is not None:
        out["trial_sets"] = [s.to_json() for s in run.sets]
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def trials_jsonl(run: RunResult) -> str:
    return "".join(json.dumps(t.to_json(), sort_keys=True) + "\n" for t in run.trials)
