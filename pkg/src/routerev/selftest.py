"""Bundled self-checks run by ``routerev selftest``.

Each suite returns ``(ok, detail)``; the runner adds wall-clock timing.
The calibration suite reads the similarity weights and decay constants
from the active config, so a mistuned config fails it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels as K
from . import oracles as O
from .calibration import calibrate
from .config import RunConfig
from .dataset import CitySpec, generate_dataset
from .geo import GeoPoint, Polyline, destination_point
from .graph import build_grid
from .harness.clients import ModelResponse
from .harness.evaluate import confidence, normalize_robustness, robustness, sigma_from_similarities
from .instructions import commands_from_lines
from .metrics import return_success, similarity
from .pathbuilder import build, dead_reckon


@dataclass(frozen=True)
class SuiteResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def _pairs(n: int, max_pts: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        k, m = rng.integers(1, max_pts + 1, 2)
        a = np.c_[43.6 + rng.random(k) * 0.02, -79.4 + rng.random(k) * 0.02]
        b = np.c_[43.6 + rng.random(m) * 0.02, -79.4 + rng.random(m) * 0.02]
        yield a, b


def _matrix(a, b):
    return O.matrix_metric(K.distance_matrix(K._rad(a), K._rad(b)))


def suite_frechet(cfg) -> tuple[bool, str]:
    bad = 0
    for a, b in _pairs(100, 8, 11):
        ia, ib, d = _matrix(a, b)
        want = O.recursive_frechet(ia, ib, d)
        bad += K.frechet_numba(a, b) != want or K.frechet_numpy(a, b) != want
    return bad == 0, f"100 pairs, {bad} mismatches vs recursive oracle"


def suite_hausdorff(cfg) -> tuple[bool, str]:
    bad = order = 0
    for a, b in _pairs(100, 12, 12):
        ia, ib, d = _matrix(a, b)
        want = O.brute_hausdorff(ia, ib, d)
        bad += K.hausdorff_numba(a, b) != want or K.hausdorff_numpy(a, b) != want
        order += K.frechet_points(a, b) < K.hausdorff_points(a, b)
    return bad == 0 and order == 0, f"100 pairs, {bad} mismatches vs brute force, {order} Frechet<Hausdorff"


def suite_edit(cfg) -> tuple[bool, str]:
    bad = 0
    tol = cfg["metrics"]["match_tol"] * 30  # random points are far apart; widen so matches occur
    for a, b in _pairs(100, 12, 13):
        ia, ib, d = _matrix(a, b)
        want = O.textbook_edit_distance(ia, ib, tol, d)
        bad += K.edit_numba(a, b, tol) != want or K.edit_numpy(a, b, tol) != want
    return bad == 0, f"100 pairs, {bad} mismatches vs table DP"


def suite_haversine(cfg) -> tuple[bool, str]:
    worst = 0.0
    for a, b in _pairs(50, 6, 14):
        D = K.distance_matrix(K._rad(a), K._rad(b))
        for i, p in enumerate(a):
            for j, q in enumerate(b):
                ref = O._hav(p, q)
                worst = max(worst, abs(D[i, j] - ref) / max(ref, 1.0))
    return worst < 1e-9, f"max relative difference {worst:.2e}"


def suite_round_trip(cfg) -> tuple[bool, str]:
    g = build_grid(20, 20, 100.0, 10.0, 3)
    ds = generate_dataset(CitySpec("selftest", g.point("r010c010"), sigma=500.0, r_min=400.0, r_max=1500.0),
                          40, 3, g, min_length=500.0, max_length=2000.0)
    sims = [similarity(build("\n".join(r.instructions), r.start, g).geometry, r.geometry).value for r in ds.records]
    frac = sum(s >= 85.0 for s in sims) / len(sims)
    return frac >= 0.95, f"{len(sims)} routes, {100 * frac:.1f}% at similarity >= 85"


def suite_closed_square(cfg) -> tuple[bool, str]:
    lines = ["Head north, continue for 200 meters.", "Turn right, continue for 200 meters.",
             "Turn right, continue for 200 meters.", "Turn right, continue for 200 meters."]
    s = GeoPoint(43.65, -79.38)
    end = dead_reckon(commands_from_lines(lines), s).position
    gap = O._hav(s.as_tuple(), end.as_tuple())
    near = destination_point(s, 45.0, 19.0)
    far = destination_point(s, 45.0, 25.0)
    tol = cfg["tolerances"]["return_m"]
    ok = gap < 1.0 and return_success(near, s, tol) and not return_success(far, s, tol)
    return ok, f"square closes within {gap:.3f} m; 19 m counts, 25 m does not"


def suite_robustness(cfg) -> tuple[bool, str]:
    p = [GeoPoint(43.65, -79.38), GeoPoint(43.655, -79.38)]
    same = [Polyline(p)] * 6
    r_same, s_same = robustness(same)
    sig = sigma_from_similarities([100.0, 0.0])
    norm = normalize_robustness([0.0, 5.0, 10.0])
    ok = s_same == 0.0 and r_same == 100.0 and abs(sig - 50.0) < 1e-9 and norm == [100.0, 50.0, 0.0]
    return ok, f"identical: sigma={s_same}, R={r_same}; sigma(100,0)={sig}; scale {norm}"


def suite_confidence(cfg) -> tuple[bool, str]:
    two = ModelResponse("m", "r", 0, "Head north, then turn left.",
                        (("Head", 0.0), (" north", math.log(0.9)), (", then turn ", 0.0), ("left", math.log(0.7)),
                         (".", 0.0)))
    one = ModelResponse("m", "r", 0, "Go east.", (("Go", 0.0), (" east", math.log(0.8)), (".", 0.0)))
    none = ModelResponse("m", "r", 0, "Go east.")
    c2, c1, c0 = confidence(two), confidence(one), confidence(none)
    return c2 == 80.0 and c1 == 80.0 and c0 is None, f"{{0.9, 0.7}} -> {c2}; {{0.8}} -> {c1}; no logprobs -> {c0}"


def suite_calibration(cfg) -> tuple[bool, str]:
    r = calibrate(cfg.weights(), cfg.metric_params())
    lat = ", ".join(f"{v:.1f}" for v in r.lateral)
    return r.ok, (f"identical {r.identical:.6f}, 5 km {r.translated_5km:.2f}, "
                  f"truncated {r.truncated_10pct:.2f}, lateral [{lat}]")


SUITES: dict[str, Callable[[RunConfig], tuple[bool, str]]] = {
    "frechet-oracle": suite_frechet,
    "hausdorff-oracle": suite_hausdorff,
    "edit-oracle": suite_edit,
    "haversine": suite_haversine,
    "round-trip": suite_round_trip,
    "closed-square": suite_closed_square,
    "robustness": suite_robustness,
    "confidence": suite_confidence,
    "calibration": suite_calibration,
}


def run_suites(cfg: RunConfig, names=None) -> list[SuiteResult]:
    out = []
    for name in names or SUITES:
        t0 = time.perf_counter()
        try:
            ok, detail = SUITES[name](cfg)
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(SuiteResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
