"""Command-line driver: generate -> prompt -> collect -> score -> report, plus build and selftest."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dataset import CitySpec, generate_dataset, read_records, records_geojson, write_records
from .errors import FixtureMissing, MissingInitialBearing, ParseError, RouteRevError
from .geo import GeoPoint
from .graph import RoadGraph, build_grid, load_graph
from .harness.clients import ChatClient, ReplayClient, collect_responses, read_responses, write_responses
from .harness.prompts import PromptBundle, build_prompts, find_start_point
from .harness.report import aggregate, report_csv, report_json, score_run, trials_jsonl
from .harness.synthetic import NAIVE_INVERSION, SELF_ORACLE, synthetic_responses
from .pathbuilder import build

log = logging.getLogger("routerev")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING_INPUT = 2
EXIT_MISSING_BEARING = 3

EXIT_CODES = f"""\
exit codes:
  {EXIT_OK}  success
  {EXIT_ERROR}  module error, invalid input, or failed selftest suite
  {EXIT_MISSING_INPUT}  missing input file or bad command-line usage
  {EXIT_MISSING_BEARING}  instructions lack an initial absolute direction (build)
"""


class MissingInput(Exception):
    pass


def _need(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingInput(f"{what} {p} not found")
    return p


def _write_text(path: str | Path, text: str) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_run_graph(cfg: RunConfig, override: str | None = None) -> RoadGraph:
    src = override or cfg["graph"]["source"]
    if src == "grid":
        gc = cfg["graph"]["grid"]
        return build_grid(gc["rows"], gc["cols"], gc["spacing"], gc["jitter"], gc["seed"], origin=cfg.grid_origin())
    return load_graph(_need(src, "graph file"), cfg["graph"]["format"])


def city_of(cfg: RunConfig, g: RoadGraph) -> CitySpec:
    c = cfg["city"]
    if c["center"] is None:
        xy = np.array([[g.point(n).lat, g.point(n).lon] for n in g.node_ids])
        center = GeoPoint(float(xy[:, 0].mean()), float(xy[:, 1].mean()))
    else:
        center = GeoPoint(*c["center"])
    return CitySpec(c["name"], center, c["sigma"], c["r_min"], c["r_max"], c["country"])


def _config(args) -> RunConfig:
    overrides: dict = {}
    if args.seed is not None:
        overrides["dataset"] = {"seed": args.seed}
    return load_config(_need(args.config, "config file") if args.config else None, overrides)


# --- commands -----------------------------------------------------------------


def cmd_generate(args, cfg: RunConfig) -> int:
    g = load_run_graph(cfg, args.graph)
    d = cfg["dataset"]
    n = args.n if args.n is not None else d["n"]
    ds = generate_dataset(city_of(cfg, g), n, d["seed"], g, jobs=args.jobs, buffer=d["buffer"],
                          orientation=d["orientation"], snap_cap=cfg["tolerances"]["snap_cap_m"],
                          min_length=d["min_length"], max_length=d["max_length"], bands=cfg.bands())
    out = Path(args.out)
    fmt = args.format or "jsonl"
    if fmt == "jsonl":
        out.parent.mkdir(parents=True, exist_ok=True)
        write_records(ds.records, out)
    elif fmt == "geojson":
        _write_text(out, json.dumps(records_geojson(ds.records), sort_keys=True) + "\n")
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "city", "length_m", "turns", "complexity", "difficulty"])
        for r in ds.records:
            w.writerow([r.id, r.city, f"{r.length_m:.3f}", r.turns, f"{r.complexity:.6f}", r.difficulty or ""])
        _write_text(out, buf.getvalue())
    summary = Path(args.summary) if args.summary else out.with_name(out.stem + ".summary.json")
    _write_text(summary, json.dumps(ds.summary(), indent=2, sort_keys=True) + "\n")
    counts = ", ".join(f"{k} {v['count']}" for k, v in ds.summary()["tiers"].items())
    print(f"wrote {len(ds.records)} records to {out} ({counts}); summary {summary}")
    return EXIT_OK


def cmd_prompt(args, cfg: RunConfig) -> int:
    records = read_records(_need(args.dataset, "dataset"))
    country = cfg["city"]["country"]

    def place(r) -> str:
        if args.place:
            return args.place
        name = r.city or cfg["city"]["name"]
        return f"{name}, {country}" if country else name

    lines = [json.dumps(build_prompts(r, place(r), args.example).to_json(), ensure_ascii=False) for r in records]
    _write_text(args.out, "".join(s + "\n" for s in lines))
    print(f"wrote {len(lines)} prompt bundles to {args.out}")
    return EXIT_OK


def _read_prompts(path: Path) -> list[PromptBundle]:
    out = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(PromptBundle.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"invalid prompt bundle: {exc}", line=i) from exc
    return out


def cmd_collect(args, cfg: RunConfig) -> int:
    n = args.trials if args.trials is not None else cfg["trials"]["n"]
    if args.synthetic:
        if not args.dataset:
            raise RouteRevError("--synthetic needs --dataset")
        records = read_records(_need(args.dataset, "dataset"))
        g = load_run_graph(cfg, args.graph) if args.synthetic == SELF_ORACLE else None
        responses = synthetic_responses(records, args.synthetic, n, g)
    else:
        if not args.prompts:
            raise RouteRevError("collect needs --prompts (or --dataset with --synthetic)")
        bundles = _read_prompts(_need(args.prompts, "prompts file"))
        mode = "replay" if args.replay else cfg["client"]["mode"]
        if mode == "replay":
            if not args.replay:
                raise RouteRevError("replay mode needs --replay RESPONSES")
            client = ReplayClient(_need(args.replay, "replay file"), args.model)
        else:
            c = cfg["client"]
            client = ChatClient(c["endpoint"], args.model or c["model"], c["api_key_env"], temperature=c["temperature"],
                                logprobs=c["logprobs"], max_retries=c["max_retries"], timeout=c["timeout"],
                                audit_path=c["audit_path"])
        responses = []
        for b in bundles:
            try:
                responses.extend(collect_responses(b, client, n).responses)
            except FixtureMissing as exc:
                print(f"warning: {exc}", file=sys.stderr)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_responses(responses, args.out)
    print(f"wrote {len(responses)} responses to {args.out}")
    return EXIT_OK


def _parse_start(text: str) -> GeoPoint:
    try:
        lat, lon = (float(v) for v in text.split(","))
    except ValueError:
        raise RouteRevError(f"--start must be LAT,LON, got {text!r}") from None
    return GeoPoint(lat, lon)


def cmd_build(args, cfg: RunConfig) -> int:
    text = _need(args.instructions, "instructions file").read_text(encoding="utf-8")
    start = _parse_start(args.start) if args.start else find_start_point(text)
    if start is None:
        raise RouteRevError("no --start given and the instructions have no 'Start Point:' line")
    g = load_run_graph(cfg, args.graph)
    bp = build(text, start, g, require_depart=not args.lenient, snap_cap=cfg["tolerances"]["snap_cap_m"],
               deflections=cfg.deflections())
    feature = bp.to_geojson()
    fmt = args.format or "geojson"
    body = json.dumps(feature, sort_keys=True) + "\n" if fmt == "jsonl" else json.dumps(feature, indent=2,
                                                                                     sort_keys=True) + "\n"
    if fmt == "csv":
        body = "lat,lon\n" + "".join(f"{p.lat:.7f},{p.lon:.7f}\n" for p in bp.geometry)
    if args.out:
        _write_text(args.out, body)
        end = bp.geometry[-1]
        print(f"wrote {len(bp.geometry)}-point path to {args.out}; ends at {end.lat:.6f},{end.lon:.6f}")
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_score(args, cfg: RunConfig) -> int:
    records = read_records(_need(args.dataset, "dataset"))
    responses = read_responses(_need(args.responses, "responses file"))
    g = load_run_graph(cfg, args.graph)
    n = args.trials if args.trials is not None else cfg["trials"]["n"]
    run = score_run(records, responses, g, n_trials=n, models=args.models, jobs=args.jobs, weights=cfg.weights(),
                    params=cfg.metric_params(), **cfg.trial_kwargs())
    for u in run.uncovered:
        if u.get("unknown_route"):
            print(f"warning: responses for unknown route {u['route_id']}", file=sys.stderr)
        else:
            print(f"warning: FixtureMissing: {u['model']}/{u['route_id']} lacks trials {u['missing_trials']}; "
                  "scored as empty", file=sys.stderr)
    rep = aggregate(run)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "trials.jsonl", trials_jsonl(run))
    _write_text(out / "report.csv", report_csv(rep))
    _write_text(out / "report.json", report_json(rep, run))
    print(f"scored {len(run.trials)} trials; wrote {out / 'trials.jsonl'}, {out / 'report.csv'}, {out / 'report.json'}")
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    src = Path(args.run)
    path = _need(src / "report.json" if src.is_dir() else src, "report")
    rep = json.loads(path.read_text(encoding="utf-8"))
    body = report_csv(rep) if (args.format or "csv") == "csv" else json.dumps(rep, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, body)
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_selftest(args, cfg: RunConfig) -> int:
    from .selftest import SUITES, run_suites

    names = args.only or list(SUITES)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise RouteRevError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    results = run_suites(cfg, names)
    width = max(len(r.name) for r in results)
    print(f"{'suite'.ljust(width)}  status  seconds  detail")
    for r in results:
        print(f"{r.name.ljust(width)}  {'PASS' if r.ok else 'FAIL':6}  {r.seconds:7.3f}  {r.detail}")
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} suites passed")
    return EXIT_OK if failed == 0 else EXIT_ERROR


# --- parser -------------------------------------------------------------------


def _globals(defaults: bool) -> argparse.ArgumentParser:
    # the same flags are accepted before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--config", default=d(None), help="YAML run configuration")
    p.add_argument("--seed", type=int, default=d(None), help="dataset seed (overrides config)")
    p.add_argument("--jobs", type=int, default=d(1), help="worker processes for generate and score")
    p.add_argument("--format", choices=("jsonl", "geojson", "csv"), default=d(None), help="output format")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="routerev", parents=[_globals(True)],
                                     description="Route-reversal benchmark pipeline.",
                                     epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    common = [_globals(False)]

    def add(name: str, fn: Callable, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=common, help=help, description=help, epilog=EXIT_CODES,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.set_defaults(func=fn)
        return sp

    sp = add("generate", cmd_generate, "sample routes on the graph and write a labeled dataset")
    sp.add_argument("--out", required=True)
    sp.add_argument("--n", type=int, help="number of routes (overrides config)")
    sp.add_argument("--graph", help="graph file (edge-list JSONL or GeoJSON) instead of the configured source")
    sp.add_argument("--summary", help="summary JSON path (default: <out>.summary.json)")

    sp = add("prompt", cmd_prompt, "write guide + instruction prompts for every record")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--place", help="place name for the guide prompt (default: record city)")
    sp.add_argument("--example", help="worked example inserted into the guide prompt")

    sp = add("collect", cmd_collect, "gather model responses (replay file, live endpoint, or synthetic)")
    sp.add_argument("--prompts")
    sp.add_argument("--dataset", help="dataset, for --synthetic responders")
    sp.add_argument("--out", required=True)
    sp.add_argument("--replay", help="JSONL of canned responses")
    sp.add_argument("--model", help="model name to select (replay) or request (live)")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--synthetic", choices=(SELF_ORACLE, NAIVE_INVERSION))
    sp.add_argument("--graph")

    sp = add("build", cmd_build, "turn an instruction file into a path on the graph (GeoJSON LineString)")
    sp.add_argument("--instructions", required=True)
    sp.add_argument("--start", help="LAT,LON (default: the file's 'Start Point:' line)")
    sp.add_argument("--graph")
    sp.add_argument("--out")
    sp.add_argument("--lenient", action="store_true", help="assume north when the first direction is relative")

    sp = add("score", cmd_score, "evaluate responses against the dataset and write trial results + report")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--responses", required=True)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--graph")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--models", nargs="*", help="models expected in the run (missing ones score as empty)")

    sp = add("report", cmd_report, "re-render a scored run's report as CSV or JSON")
    sp.add_argument("--run", required=True, help="score output directory or a report.json")
    sp.add_argument("--out")

    sp = add("selftest", cmd_selftest, "run the bundled oracle and calibration suites")
    sp.add_argument("--only", nargs="*", help="subset of suites")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except MissingInitialBearing as exc:
        print(f"error: missing_initial_absolute_direction: {exc}", file=sys.stderr)
        return EXIT_MISSING_BEARING
    except (RouteRevError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
