"""Command-line entry point: ``comeback <subcommand> ...``.

Exit codes: 0 success, 2 usage or parameter error, 3 data error,
4 numeric or convergence error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from . import __version__
from .cohort import DEFAULT_GAP, label_authors
from .community import louvain_partition
from .corpus import DEFAULT_SPAN, Corpus, dumps_papers, read_papers
from .errors import ComebackError, DataError, ParameterError
from .graph import GraphOptions, build_citation_graph
from .metrics import compute_features
from .pipeline import (
    PipelineConfig, cohorts_csv, dumps_json, features_csv, graph_csv, partition_jsonl,
    prediction_report, read_cohorts, read_features, read_graph, read_partition,
    run_pipeline, stats_report, write_manifest, write_text,
)
from .synth import SynthConfig, generate_corpus

log = logging.getLogger("comeback")


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParameterError(f"{path} must hold a JSON object")
    return data


def _emit(out, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        write_text(out, text)


def _span(args):
    return tuple(args.span) if args.span else DEFAULT_SPAN


# ---------------------------------------------------------------- subcommands

def cmd_ingest(args):
    records, stats = read_papers(args.input, args.format, _span(args))
    print(json.dumps(stats.to_json(), sort_keys=True), file=sys.stderr)
    _emit(args.out, dumps_papers(records))
    return [args.input]


def cmd_synth(args):
    cfg = dict(args.synth_config or {})
    cfg.setdefault("seed", args.seed)
    if args.n_authors is not None:
        cfg["n_authors"] = args.n_authors
    records, truth = generate_corpus(SynthConfig.from_dict(cfg))
    _emit(args.out, dumps_papers(records))
    if args.truth:
        write_text(args.truth, truth.to_json())
    return [args.config_file] if args.config_file else []


def cmd_label(args):
    corpus = Corpus.read(args.corpus, args.format, _span(args))
    end = args.end_year if args.end_year is not None else _span(args)[1]
    careers = label_authors(corpus.author_index, end, args.gap, args.matched_length)
    _emit(args.out, cohorts_csv(careers))
    return [args.corpus]


def cmd_communities(args):
    corpus = Corpus.read(args.corpus, args.format, _span(args))
    year = args.year if args.year is not None else _span(args)[1]
    graph = build_citation_graph(corpus, year, GraphOptions(args.exclude_self_citations, args.ref_window))
    if args.gamma <= 0:
        raise ParameterError("--gamma must be positive")
    part = louvain_partition(graph, args.gamma, args.seed)
    _emit(args.out, partition_jsonl(part))
    if args.graph_out:
        write_text(args.graph_out, graph_csv(graph))
    return [args.corpus]


def cmd_metrics(args):
    corpus = Corpus.read(args.corpus, args.format, _span(args))
    graph = read_graph(args.graph, corpus)
    part = read_partition(args.partition)
    careers = read_cohorts(args.cohorts, corpus)
    rows = compute_features(careers, corpus.author_index, graph, part,
                            citations_within_window=args.citations_within_window,
                            threads=args.threads)
    _emit(args.out, features_csv(rows))
    return [args.corpus, args.graph, args.partition, args.cohorts]


def cmd_stats(args):
    rows = read_features(args.features)
    corpus = Corpus.read(args.corpus, args.format, _span(args)) if args.corpus else None
    careers = read_cohorts(args.cohorts, corpus) if args.cohorts else None
    report = stats_report(rows, careers, corpus, args.n_resamples, args.seed)
    _emit(args.out, dumps_json(report))
    return [args.features, args.cohorts, args.corpus]


def cmd_predict(args):
    rows = read_features(args.features)
    sets = ("baseline", "bridging") if args.set == "both" else (args.set,)
    models = ("rf", "lr") if args.model == "both" else (args.model,)
    overrides = {}
    if args.n_trees is not None:
        overrides["n_trees"] = args.n_trees
    report = prediction_report(rows, sets, models, args.folds, args.seed, args.threads,
                               args.shuffle_labels, overrides, explain=not args.no_shapley)
    _emit(args.out, dumps_json(report))
    return [args.features]


def cmd_run(args):
    cfg = PipelineConfig.from_dict(args.pipeline_config or {})
    if args.out_dir:
        cfg.out_dir = args.out_dir
    result = run_pipeline(cfg, args.seed, args.threads, force=args.force)
    print(json.dumps(result, sort_keys=True))
    return None


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker cap; output does not depend on it")
    common.add_argument("--config", dest="config_file", help="JSON file of settings")
    common.add_argument("-v", "--verbose", action="store_true")

    io_opts = argparse.ArgumentParser(add_help=False)
    io_opts.add_argument("--format", choices=("jsonl", "aminer"), default="jsonl")
    io_opts.add_argument("--span", type=int, nargs=2, metavar=("START", "END"))

    # global flags live on each subcommand: argparse would otherwise let
    # subparser defaults overwrite values given before the subcommand
    p = argparse.ArgumentParser(prog="comeback", description="Comeback-researcher analysis pipeline")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    p.subcommands = sub.choices

    s = sub.add_parser("ingest", parents=[common, io_opts], help="parse and normalize a corpus")
    s.add_argument("--input", required=True, help="path or - for stdin")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", parents=[common], help="generate a planted corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--truth")
    s.add_argument("--n-authors", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("label", parents=[common, io_opts], help="classify careers")
    s.add_argument("--corpus", required=True)
    s.add_argument("--end-year", type=int)
    s.add_argument("--gap", type=int, default=DEFAULT_GAP)
    s.add_argument("--matched-length", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_label)

    s = sub.add_parser("communities", parents=[common, io_opts], help="build the graph and run Louvain")
    s.add_argument("--corpus", required=True)
    s.add_argument("--year", type=int)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--exclude-self-citations", action="store_true")
    s.add_argument("--ref-window", type=int)
    s.add_argument("--graph-out", help="also write the citation graph as CSV")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_communities)

    s = sub.add_parser("metrics", parents=[common, io_opts], help="per-author features")
    s.add_argument("--corpus", required=True)
    s.add_argument("--graph", required=True)
    s.add_argument("--partition", required=True)
    s.add_argument("--cohorts", required=True)
    s.add_argument("--citations-within-window", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("stats", parents=[common, io_opts], help="statistical comparison")
    s.add_argument("--features", required=True)
    s.add_argument("--cohorts", help="enables survival and exit-decay blocks")
    s.add_argument("--corpus", help="enables venue shares (needs --cohorts)")
    s.add_argument("--n-resamples", type=int, default=10_000)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("predict", parents=[common], help="cross-validated classification")
    s.add_argument("--features", required=True)
    s.add_argument("--set", choices=("baseline", "bridging", "both"), default="both")
    s.add_argument("--model", choices=("lr", "rf", "both"), default="both")
    s.add_argument("--folds", type=int, default=5)
    s.add_argument("--n-trees", type=int)
    s.add_argument("--shuffle-labels", action="store_true", help="permutation null")
    s.add_argument("--no-shapley", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("run", parents=[common], help="full cached pipeline")
    s.add_argument("--out-dir")
    s.add_argument("--force", action="store_true", help="ignore cached artifacts")
    s.set_defaults(func=cmd_run)
    return p


def _apply_config(parser, argv, args):
    """Settings from --config become defaults; explicit flags still win."""
    if not args.config_file:
        args.synth_config = args.pipeline_config = None
        return args
    data = _load_json(args.config_file)
    if args.command == "synth":
        args.synth_config, args.pipeline_config = data, None
        return args
    if args.command == "run":
        args.synth_config, args.pipeline_config = None, data
        return args
    sub = parser.subcommands[args.command]
    known = set(vars(args))
    unknown = {k.replace("-", "_") for k in data} - known
    if unknown:
        raise ParameterError(f"unknown settings for {args.command}: {sorted(unknown)}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in data.items()})
    args = parser.parse_args(argv)
    args.synth_config = args.pipeline_config = None
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    try:
        if args.threads < 1:
            raise ParameterError("--threads must be >= 1")
        args = _apply_config(parser, argv, args)
        inputs = args.func(args)
        if inputs is not None:
            flags = {k: v for k, v in vars(args).items()
                     if k not in ("func", "synth_config", "pipeline_config") and not callable(v)}
            for attr in ("out", "graph_out", "truth"):
                target = getattr(args, attr, None)
                if target and target != "-":
                    write_manifest(target, args.command, flags, inputs, args.seed, started, argv=argv)
    except ComebackError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
