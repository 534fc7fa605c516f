"""Operator command line: every analysis runs offline from corpus + log files.

Tables are tab-delimited with a header row, written to stdout or --out; the
sweep and redundancy reports can also render their figure next to the table.
Randomized subcommands require an explicit --seed so every run is
reproducible. Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from decimal import Decimal
from typing import Iterable, Optional, Sequence

from .aggregate import sweep_k, sweep_table
from .api import ApiConfig, serve
from .corpus import load_pubtator, partition_corpus
from .costing import CostParams, cost_breakdown
from .errors import CrowdspanError
from .redundancy import redundancy_curve, redundancy_table
from .scoring import evaluate_corpus, worker_reports
from .simulate import PopulationParams, campaign_service
from .store import FileEventLog, import_submission_dump, load_submissions, read_log

USAGE_ERROR = 2
DATA_ERROR = 1


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _write_table(
    headers: Sequence[str], rows: Iterable[dict], out: Optional[str]
) -> None:
    lines = ["\t".join(headers)]
    lines += ["\t".join(_fmt(row[h]) for h in headers) for row in rows]
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _load_corpus(path: str):
    try:
        return load_pubtator(path)
    except OSError as exc:
        raise CrowdspanError(f"{path}: {exc}") from exc


def _load_log_submissions(log_path: str, corpus):
    return load_submissions(read_log(log_path), corpus)


def cmd_validate_corpus(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    print(f"{len(corpus.documents)} documents, {corpus.total_gold_spans()} gold spans")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    if args.hypothesis:
        hyp = _load_corpus(args.hypothesis)
        metrics = evaluate_corpus(corpus, {d: hyp.gold_spans(d) for d in hyp.documents})
        _write_table(
            ["tp", "fp", "fn", "precision", "recall", "f1"],
            [metrics.as_record()],
            args.out,
        )
        return 0
    subs = _load_log_submissions(args.submissions, corpus)
    if args.per_worker:
        rows = [
            {
                "worker_id": r.worker_id,
                "documents": r.documents_completed,
                "mean_f": r.mean_f,
                "stddev_f": r.stddev_f,
            }
            for r in worker_reports(subs, corpus)
        ]
        _write_table(["worker_id", "documents", "mean_f", "stddev_f"], rows, args.out)
        return 0
    hypothesis: dict = {}
    for sub in subs:
        hypothesis.setdefault(sub.doc_id, set()).update(sub.spans)
    metrics = evaluate_corpus(corpus, hypothesis)
    _write_table(
        ["tp", "fp", "fn", "precision", "recall", "f1"], [metrics.as_record()], args.out
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    subs = _load_log_submissions(args.submissions, corpus)
    points = sweep_k(subs, corpus, args.k_max, include_training=args.include_training)
    _write_table(
        ["k", "tp", "fp", "fn", "precision", "recall", "f1"],
        sweep_table(points),
        args.out,
    )
    if args.fig:
        from .plots import save_figure, sweep_figure

        save_figure(sweep_figure(points), args.fig)
    return 0


def cmd_redundancy(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    subs = _load_log_submissions(args.submissions, corpus)
    estimates = redundancy_curve(
        subs,
        corpus,
        args.n_max,
        repetitions=args.reps,
        seed=args.seed,
        best_k_scope=args.scope,
        include_training=args.include_training,
    )
    _write_table(
        ["n", "mean_max_f", "stddev_max_f", "best_k_mode"],
        redundancy_table(estimates),
        args.out,
    )
    if args.fig:
        from .plots import redundancy_figure, save_figure

        save_figure(redundancy_figure(estimates), args.fig)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    if args.params:
        with open(args.params, "r", encoding="utf-8") as handle:
            params = PopulationParams.from_dict(json.load(handle))
    else:
        params = PopulationParams.from_dict(
            {
                "n_workers": args.workers,
                "miss": {"kind": "uniform", "low": 0.05, "high": 0.32},
                "spurious": {"kind": "uniform", "low": 0.2, "high": 1.7},
                "boundary": {"kind": "uniform", "low": 0.0, "high": 0.17},
            }
        )
    corpus = partition_corpus(
        corpus,
        training_ids=tuple(args.training_ids.split(",")) if args.training_ids else None,
        training_count=args.training_count,
        gold_fraction=args.gold_fraction,
        seed=args.seed,
    )
    log = FileEventLog(args.out, fsync=False)
    service = campaign_service(
        corpus,
        params,
        args.redundancy,
        args.seed,
        gold_interval=args.gold_interval,
        log=log,
    )
    submissions = service.submissions()
    workers = service.state.workers
    print(f"workers registered: {len(workers)}")
    print(
        "workers active or retired: "
        f"{sum(1 for w in workers.values() if w.state.value in ('ACTIVE', 'BLOCKED'))}"
    )
    print(f"workers blocked: {sum(1 for w in workers.values() if w.state.value == 'BLOCKED')}")
    print(f"submissions: {len(submissions)}")
    print(f"events: {len(log)} -> {args.out}")
    log.close()
    return 0


def cmd_cost(args: argparse.Namespace) -> int:
    params = CostParams(
        per_annotation_fee=Decimal(args.fee),
        survey_fee=Decimal(args.survey_fee),
        training_fee_per_doc=Decimal(args.training_fee),
        training_docs=args.training_docs,
        redundancy=args.redundancy,
    )
    breakdown = cost_breakdown(params, args.workers, args.documents)
    for key in (
        "trained_workers",
        "paid_documents",
        "per_abstract_cost",
        "training_cost",
        "annotation_cost",
        "total",
    ):
        print(f"{key}\t{breakdown[key]}")
    return 0


def cmd_import(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    log = FileEventLog(args.out, fsync=False)
    skipped: list[str] = []

    def on_bad_row(lineno: int, reason: str) -> None:
        skipped.append(f"{args.input}:{lineno}: {reason}")

    with open(args.input, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle, delimiter=args.delimiter)
        count = import_submission_dump(
            reader,
            corpus,
            log,
            worker_col=args.worker_col,
            doc_col=args.doc_col,
            start_col=args.start_col,
            end_col=args.end_col,
            on_bad_row=on_bad_row if args.skip_bad_rows else None,
        )
    log.close()
    for line in skipped:
        print(f"skipped {line}", file=sys.stderr)
    print(f"imported {count} submissions -> {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    if args.config:
        config = ApiConfig.from_file(args.config)
    else:
        config = ApiConfig(
            corpus_path=args.corpus,
            seed=args.seed,
            host=args.host,
            port=args.port,
            log_path=args.log,
            redundancy_target=args.redundancy,
            gold_interval=args.gold_interval,
            training_doc_ids=(
                tuple(args.training_ids.split(",")) if args.training_ids else None
            ),
            quiz_path=args.quiz,
        )
    serve(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdspan",
        description="Crowdsourced span annotation: routing, aggregation, scoring, cost.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-corpus", help="parse a corpus file and report counts")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_validate_corpus)

    p = sub.add_parser("eval", help="score a hypothesis corpus or submission log")
    p.add_argument("--corpus", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--hypothesis", help="PubTator file to score against the corpus")
    group.add_argument("--submissions", help="event log with SUBMITTED records")
    p.add_argument("--per-worker", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="vote-threshold sweep table (and figure)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--submissions", required=True)
    p.add_argument("--k-max", type=int, default=15)
    p.add_argument("--include-training", action="store_true")
    p.add_argument("--out")
    p.add_argument("--fig", help="also render the sweep figure to this path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("redundancy", help="workers-per-document quality curve")
    p.add_argument("--corpus", required=True)
    p.add_argument("--submissions", required=True)
    p.add_argument("--n-max", type=int, default=15)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scope", choices=("global", "per_document"), default="global")
    p.add_argument("--include-training", action="store_true")
    p.add_argument("--out")
    p.add_argument("--fig", help="also render the curve figure to this path")
    p.set_defaults(func=cmd_redundancy)

    p = sub.add_parser("simulate", help="run a synthetic campaign into an event log")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=30)
    p.add_argument("--redundancy", type=int, default=15)
    p.add_argument("--gold-interval", type=int, default=10)
    p.add_argument("--gold-fraction", type=float, default=0.10)
    p.add_argument("--training-count", type=int, default=4)
    p.add_argument("--training-ids", help="comma-separated doc ids to use for training")
    p.add_argument("--params", help="JSON file with population distributions")
    p.add_argument("--out", required=True, help="event log path to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cost", help="campaign cost from counts and fees")
    p.add_argument("--workers", type=int, required=True)
    p.add_argument("--documents", type=int, required=True)
    p.add_argument("--fee", default="0.06", help="per annotation")
    p.add_argument("--survey-fee", default="0.06")
    p.add_argument("--training-fee", default="0.06", help="per training document")
    p.add_argument("--training-docs", type=int, default=4)
    p.add_argument("--redundancy", type=int, default=15)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("import", help="map an external submission dump into a log")
    p.add_argument("--corpus", required=True)
    p.add_argument("--input", required=True, help="delimited dump with a header row")
    p.add_argument("--out", required=True, help="event log path to write")
    p.add_argument("--delimiter", default="\t")
    p.add_argument("--worker-col", default="worker_id")
    p.add_argument("--doc-col", default="doc_id")
    p.add_argument("--start-col", default="start")
    p.add_argument("--end-col", default="end")
    p.add_argument("--skip-bad-rows", action="store_true")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="JSON config file (overrides the flags)")
    p.add_argument("--corpus")
    p.add_argument("--seed", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--log", help="event log path (memory-only when omitted)")
    p.add_argument("--redundancy", type=int, default=15)
    p.add_argument("--gold-interval", type=int, default=10)
    p.add_argument("--training-ids")
    p.add_argument("--quiz", help="quiz bank JSON path")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve" and not args.config and (args.corpus is None or args.seed is None):
        parser.error("serve requires --config or both --corpus and --seed")
    try:
        return args.func(args)
    except CrowdspanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
