import math

import pytest

from routerev.harness.clients import ModelResponse
from routerev.harness.report import aggregate, mean_se, report_csv, report_json, score_run, trials_jsonl
from routerev.harness.synthetic import SELF_ORACLE, synthetic_responses


def test_mean_se_hand_checked():
    vals = [2.0, 4.0, 4.0, 6.0]
    m, se = mean_se(vals)
    # sample variance = (4 + 0 + 0 + 4) / 3
    assert m == 4.0
    assert se == pytest.approx(math.sqrt(8 / 3) / 2, abs=1e-12)


def test_mean_se_edges():
    assert mean_se([]) == (None, None)
    assert mean_se([None, 3.0]) == (3.0, None)


@pytest.fixture(scope="module")
def oracle_run(small_dataset, small_grid):
    recs = small_dataset.records[:6]
    return recs, score_run(recs, synthetic_responses(recs, SELF_ORACLE, 2, small_grid), small_grid, n_trials=2)


def test_self_oracle_rows(oracle_run):
    _, run = oracle_run
    rep = aggregate(run)
    allrow = next(r for r in rep["rows"] if r["difficulty"] == "all")
    assert allrow["model"] == SELF_ORACLE
    assert allrow["return_rate"] == 100.0
    assert allrow["misalignment"] == 0.0
    assert allrow["confidence"] is None
    # identical trials: sigma 0 everywhere, degenerate range maps to 100
    assert allrow["robustness"] == 100.0
    assert rep["run"]["uncovered"] == []


def test_csv_reports_na(oracle_run):
    _, run = oracle_run
    text = report_csv(aggregate(run))
    header, *rows = text.strip().split("\n")
    col = header.split(",").index("confidence")
    assert rows and all(r.split(",")[col] == "N/A" for r in rows)


def test_uncovered_scored_as_empty(small_dataset, small_grid):
    recs = small_dataset.records[:2]
    resps = synthetic_responses(recs[:1], SELF_ORACLE, 2, small_grid)
    resps.append(ModelResponse(SELF_ORACLE, "ghost", 0, "Head north."))
    run = score_run(recs, resps, small_grid, n_trials=2)
    missing = [u for u in run.uncovered if u.get("route_id") == recs[1].id]
    assert missing and missing[0]["missing_trials"] == [0, 1]
    assert any(u.get("unknown_route") for u in run.uncovered)
    empty = [t for t in run.trials if t.route_id == recs[1].id]
    assert all(t.similarity == 0.0 and t.misaligned for t in empty)


def test_serializations_deterministic(oracle_run, small_grid):
    recs, run = oracle_run
    again = score_run(recs, synthetic_responses(recs, SELF_ORACLE, 2, small_grid), small_grid, n_trials=2)
    assert trials_jsonl(run) == trials_jsonl(again)
    assert report_json(aggregate(run), run) == report_json(aggregate(again), again)


def test_aggregate_rejects_empty():
    from routerev.harness.report import RunResult
    with pytest.raises(ValueError):
        aggregate(RunResult([], []))
