"""Command-line interface: ``jointfair <command> [options]``.

Exit codes: 0 on success, 1 when a computation fails, 2 on usage errors
(bad flags, missing or malformed input files, invalid configuration).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .base import ConfigurationError, EvaluationError, ParseError, SchemaError, StructuralError
from .corpus import load_qrels, load_run, write_qrels, write_run
from .evaluate import FairRelEvaluator, ScoreReport, resolve_measures
from .experiments import (
    ScoreTable,
    correlation_matrix,
    insertion_sim,
    sliding_windows,
    synthetic_popularity_run,
)
from .rerank import combmnz_rerank

DEFAULTS = {
    "k": 10,
    "k_prime": 25,
    "gamma_hd": 0.9,
    "gamma_iif": 0.8,
    "impact_threshold": 0.1,
    "hd_tiebreak": "deterministic",
    "seed": None,
    "measures": None,
    "skip_unavailable": False,
    "format": "json",
}

_EVAL_PARAMS = ("k", "gamma_hd", "gamma_iif", "impact_threshold", "hd_tiebreak", "seed", "measures",
                "skip_unavailable")


class UsageError(Exception):
    pass


def _settings(args, keys):
    """Merge flags over the JSON config file over the defaults."""
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
        config = {key.replace("-", "_"): value for key, value in config.items()}
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else config.get(key, DEFAULTS.get(key))
    return out


def _evaluator(settings, **override):
    params = {key: settings[key] for key in _EVAL_PARAMS if key in settings}
    params.update(override)
    return FairRelEvaluator(**params)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _check_inputs(*paths):
    for path in paths:
        if not Path(path).is_file():
            raise UsageError(f"no such file: {path}")


def _long_csv(key, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([key, "measure", "value"])
    for label, report in rows:
        for measure, value in report.scores.items():
            writer.writerow([label, measure, repr(float(value))])
    return buf.getvalue()


def _reports_json(key, rows, params=None):
    body = {"params": params or {}, key + "s": [{key: label, **rep.to_dict()} for label, rep in rows]}
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# Commands


def cmd_eval(args):
    _check_inputs(args.run, args.qrels)
    s = _settings(args, _EVAL_PARAMS + ("format",))
    rel = load_qrels(args.qrels)
    run = load_run(args.run)
    label = args.label or Path(args.run).stem
    report = _evaluator(s).fit(rel).evaluate(run, label)
    if s["format"] == "both":
        if args.out is None:
            raise UsageError("--format both needs --out (a path prefix)")
        stem = Path(args.out)
        report.write(stem.with_suffix(".json"), "json")
        report.write(stem.with_suffix(".csv"), "csv")
    else:
        _emit(report.to_json() if s["format"] == "json" else report.to_csv(), args.out)


def cmd_rerank(args):
    _check_inputs(args.run)
    s = _settings(args, ("k", "k_prime"))
    run = load_run(args.run)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = combmnz_rerank(run, s["k_prime"], s["k"], keep_tail=args.keep_tail)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_run(out, sys.stdout if args.out is None else args.out)


def cmd_correlate(args):
    if len(args.reports) < 2:
        raise UsageError("correlate needs at least two report files")
    _check_inputs(*args.reports)
    s = _settings(args, ("measures",))
    reports = [ScoreReport.read(p) for p in args.reports]
    table = ScoreTable.from_reports(reports)
    if s["measures"]:
        keep = [m for m in resolve_measures(s["measures"]) if m in table.frame.columns]
        table = ScoreTable(table.frame[keep])
    matrix = correlation_matrix(table, oriented=not args.raw)
    _emit(matrix.to_csv(float_format=lambda x: repr(float(x)), na_rep="nan", lineterminator="\n"), args.out)


def cmd_sliding(args):
    _check_inputs(args.run, args.qrels)
    s = _settings(args, _EVAL_PARAMS + ("format",))
    s["k"] = args.window
    rel = load_qrels(args.qrels)
    run = load_run(args.run)
    params = {key: s[key] for key in _EVAL_PARAMS}
    reports = sliding_windows(run, rel, window=args.window, starts=range(1, args.windows + 1), **params)
    rows = [(rep.label, rep) for rep in reports.values()]
    if s["format"] == "csv":
        _emit(_long_csv("window", rows), args.out)
    else:
        _emit(_reports_json("window", rows, {"window": args.window, "windows": args.windows}), args.out)


def cmd_insertion(args):
    s = _settings(args, _EVAL_PARAMS + ("format",))
    seed = 0 if s["seed"] is None else s["seed"]
    params = {key: s[key] for key in ("gamma_hd", "gamma_iif", "impact_threshold", "hd_tiebreak", "skip_unavailable")}
    traj = insertion_sim(m=args.m, n=args.n, k=s["k"], seed=seed, measures=s["measures"], **params)
    if args.out_dir is not None:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectory.csv").write_text(traj.to_csv(), encoding="utf-8")
        (out / "trajectory.json").write_text(traj.to_json(), encoding="utf-8")
    else:
        _emit(traj.to_csv() if s["format"] == "csv" else traj.to_json(), args.out)


def cmd_generate(args):
    s = _settings(args, ("k", "seed"))
    seed = 0 if s["seed"] is None else s["seed"]
    run, rel = synthetic_popularity_run(
        args.m, args.n, k=s["k"], skew=args.skew, seed=seed, depth=args.depth,
        relevant_per_user=args.relevant_per_user, noise=args.noise, bias=args.bias,
    )
    write_run(run, args.out_run)
    write_qrels(rel, args.out_qrels)


# ---------------------------------------------------------------------------
# Parser


def _measure_flags(p):
    p.add_argument("--k", type=int, help="cutoff (default 10)")
    p.add_argument("--gamma-hd", type=float, help="HD click-model patience (default 0.9)")
    p.add_argument("--gamma-iif", type=float, help="RBP patience for II-F and AI-F (default 0.8)")
    p.add_argument("--impact-threshold", type=float, help="IBO/IWO relative threshold (default 0.1)")
    p.add_argument("--hd-tiebreak", choices=("deterministic", "random"))
    p.add_argument("--measures", help="comma-separated subset of measures")
    p.add_argument("--skip-unavailable", action="store_true", default=None,
                   help="leave out measures whose input requirements fail")


def _common(p, fmt=("json", "csv")):
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=fmt)
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="jointfair", description="Joint fairness and relevance evaluation of recommender runs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="score a run against qrels")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("--label", help="report label (default: run file stem)")
    _measure_flags(p)
    _common(p, ("json", "csv", "both"))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rerank", help="CombMNZ re-ranking of a run")
    p.add_argument("run")
    p.add_argument("--k", type=int, help="final cutoff (default 10)")
    p.add_argument("--k-prime", type=int, help="candidate depth (default 25)")
    p.add_argument("--keep-tail", action="store_true", help="keep items below k' after the re-ranked block")
    p.add_argument("--config")
    p.add_argument("--out", help="output run file (default: stdout)")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("correlate", help="Kendall tau between measures over several reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--measures")
    p.add_argument("--raw", action="store_true", help="do not negate lower-is-better measures")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("sliding", help="evaluate rank windows 1..w, 2..w+1, ...")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--windows", type=int, default=5, help="number of windows")
    _measure_flags(p)
    _common(p)
    p.set_defaults(func=cmd_sliding)

    p = sub.add_parser("insertion", help="artificial insertion experiment")
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--out-dir", help="write trajectory.csv and trajectory.json here")
    _measure_flags(p)
    _common(p)
    p.set_defaults(func=cmd_insertion)

    p = sub.add_parser("generate", help="write a synthetic popularity-biased run and qrels")
    p.add_argument("out_run")
    p.add_argument("out_qrels")
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--k", type=int)
    p.add_argument("--skew", type=float, default=1.0)
    p.add_argument("--bias", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--depth", type=int)
    p.add_argument("--relevant-per-user", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ConfigurationError, FileNotFoundError, ParseError, SchemaError, StructuralError) as exc:
        print(f"jointfair {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (EvaluationError, ValueError) as exc:
        print(f"jointfair {args.command}: computation failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
