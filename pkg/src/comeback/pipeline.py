"""Artifact I/O, report builders and the cached end-to-end run.

Artifacts are plain files so each stage can be run on its own from the CLI:

    corpus.jsonl      one paper object per line
    cohorts.csv       one labeled career per author
    graph.csv         citing,cited edges; an isolated node is a row with empty cited
    partition.jsonl   {"paper", "community"} lines plus a modularity trailer
    features.csv      one FeatureRow per author, missing values as empty fields
    stats.json        group comparisons, correlations, survival and decay fits
    predictions.json  cross-validated ablation report

Every artifact gets a sibling ``<name>.manifest.json``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from . import __version__
from .cohort import ACTIVE, COMEBACK, DEFAULT_GAP, DROPOUT, AuthorCareer, cohort_summary, label_authors
from .community import Partition, louvain_partition
from .corpus import DEFAULT_SPAN, Corpus, dumps_papers, read_papers
from .errors import ComebackError, DataError, ParameterError
from .graph import CitationGraph, GraphOptions, build_citation_graph
from .metrics import (
    FEATURE_COLUMNS, FeatureRow, career_exit_series, compute_features,
    fit_exponential_decay, papers_in_window, venue_shares,
)
from .predict import FEATURE_SETS, ablation_run
from .stats import (
    GroupComparison, SurvivalCurve, adjust_comparisons, compare_groups, kaplan_meier,
    log_rank, partial_spearman, spearman,
)
from .synth import SynthConfig, generate_corpus

log = logging.getLogger(__name__)

COHORT_COLUMNS = ("author_id", "label", "first_year", "last_year", "max_gap",
                  "return_year", "window_start", "window_end")


# ---------------------------------------------------------------- helpers

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _finite(x):
    """JSON-safe value: non-finite floats become null, numpy scalars unwrap."""
    if isinstance(x, dict):
        return {str(k): _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_finite(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps_json(obj) -> str:
    return json.dumps(_finite(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def manifest_path(out) -> Path:
    return Path(str(out) + ".manifest.json")


def write_manifest(out, subcommand: str, flags: Mapping, inputs: Iterable, seed, started: float,
                   argv: list[str] | None = None, cache_key: str | None = None) -> dict:
    manifest = {
        "subcommand": subcommand,
        "flags": dict(flags),
        "argv": argv,
        "inputs": {str(p): sha256_file(p) for p in inputs if p and p != "-" and Path(p).exists()},
        "outputs": {str(out): sha256_file(out)},
        "seed": seed,
        "version": __version__,
        "duration_s": round(time.time() - started, 3),
    }
    if cache_key is not None:
        manifest["cache_key"] = cache_key
    write_text(manifest_path(out), dumps_json(manifest))
    return manifest


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _read_csv(path, required) -> list[dict]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = set(required) - set(reader.fieldnames or ())
            if missing:
                raise DataError(f"{path}: missing columns {sorted(missing)}")
            return list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _opt_int(s):
    return None if s in ("", None) else int(s)


def _opt_float(s):
    return None if s in ("", None) else float(s)


# ---------------------------------------------------------------- cohorts

def cohorts_csv(careers: Mapping[str, AuthorCareer]) -> str:
    rows = []
    for a in sorted(careers):
        c = careers[a]
        lo, hi = c.window if c.window else (None, None)
        rows.append((a, c.label, c.first_year, c.last_year, c.max_gap, c.return_year, lo, hi))
    return _csv_text(COHORT_COLUMNS, rows)


def read_cohorts(path, corpus: Corpus | None = None) -> dict[str, AuthorCareer]:
    """Careers from cohorts.csv; publication years come from ``corpus`` when given."""
    out = {}
    for r in _read_csv(path, COHORT_COLUMNS):
        a = r["author_id"]
        first, last = int(r["first_year"]), int(r["last_year"])
        if corpus is not None:
            entry = corpus.author_index.get(a)
            if entry is None:
                raise DataError(f"author {a} of {path} is not in the corpus")
            years = tuple(entry.years)
        else:
            years = (first, last) if first != last else (first,)
        ws, we = _opt_int(r["window_start"]), _opt_int(r["window_end"])
        ret = _opt_int(r["return_year"])
        out[a] = AuthorCareer(
            author_id=a, years=years, max_gap=int(r["max_gap"]), label=r["label"],
            dataset_end_year=None, gap_start_year=None, return_year=ret,
            window=None if ws is None else (ws, we),
        )
    return out


# ---------------------------------------------------------------- graph

def graph_csv(graph: CitationGraph) -> str:
    rows = []
    for i, pid in enumerate(graph.nodes):
        targets = graph.out_adj[i]
        if not targets and graph.in_degree[i] == 0:
            rows.append((pid, None))
        rows.extend((pid, graph.nodes[j]) for j in targets)
    return _csv_text(("citing", "cited"), rows)


def read_graph(path, corpus: Corpus | None = None) -> CitationGraph:
    rows = _read_csv(path, ("citing", "cited"))
    nodes, edges = set(), []
    for r in rows:
        nodes.add(r["citing"])
        if r["cited"]:
            nodes.add(r["cited"])
            edges.append((r["citing"], r["cited"]))
    g = CitationGraph.from_edges(nodes, edges)
    if corpus is not None:
        try:
            years = tuple(corpus.papers[p].year for p in g.nodes)
        except KeyError as exc:
            raise DataError(f"graph node {exc.args[0]} is not in the corpus") from exc
        g = CitationGraph(max(years, default=0), g.nodes, g.out_adj, g.options, years)
    return g


# ---------------------------------------------------------------- partition

def partition_jsonl(partition: Partition) -> str:
    lines = [json.dumps({"paper": p, "community": c}) for p, c in sorted(partition.assignment.items())]
    lines.append(json.dumps({
        "modularity": partition.modularity_value,
        "n_communities": partition.n_communities,
        "resolution": partition.resolution,
        "seed": partition.seed,
    }))
    return "\n".join(lines) + "\n"


def read_partition(path) -> Partition:
    assignment, trailer = {}, {}
    try:
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "paper" in obj:
                    assignment[str(obj["paper"])] = int(obj["community"])
                else:
                    trailer = obj
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read partition {path}: {exc}") from exc
    return Partition(assignment, float(trailer.get("resolution", 1.0)), int(trailer.get("seed", 0)),
                     float(trailer.get("modularity", float("nan"))))


# ---------------------------------------------------------------- features

def features_csv(rows: Iterable[FeatureRow]) -> str:
    cols = FeatureRow.columns()
    return _csv_text(cols, ([getattr(r, c) for c in cols] for r in rows))


def read_features(path) -> list[FeatureRow]:
    out = []
    ints = {"P", "C", "h", "ACC"}
    for r in _read_csv(path, FeatureRow.columns()):
        vals = {c: (_opt_int(r[c]) if c in ints else _opt_float(r[c])) for c in FEATURE_COLUMNS}
        out.append(FeatureRow(author_id=r["author_id"], label=r["label"], **vals))
    return sorted(out, key=lambda f: f.author_id)


# ---------------------------------------------------------------- stats report

def _test_json(t) -> dict:
    return {"statistic": t.statistic, "p_value": t.p_value, "method": t.method,
            "df": t.df, "effect": t.effect, "n1": t.n1, "n2": t.n2}


def comparison_json(c: GroupComparison) -> dict:
    return {
        "n_comeback": c.n1, "n_dropout": c.n2, "n_missing": c.n_missing,
        "mean_comeback": c.mean1, "mean_dropout": c.mean2,
        "welch": _test_json(c.welch), "mwu": _test_json(c.mwu), "ks": _test_json(c.ks),
        "cohens_d": c.cohens_d, "cliffs_delta": c.cliffs_delta,
        "bootstrap": asdict(c.bootstrap),
        "p_bh": {"welch": c.welch_p_bh, "mwu": c.mwu_p_bh, "ks": c.ks_p_bh},
    }


def _curve_json(curve: SurvivalCurve) -> dict:
    return {"times": curve.times, "survival": curve.survival, "at_risk": curve.at_risk,
            "events": curve.events, "censored": curve.censored}


def compare_cohorts(rows: Iterable[FeatureRow], n_resamples: int = 10_000, seed: int = 0,
                    metrics=FEATURE_COLUMNS) -> dict[str, GroupComparison]:
    """Comeback vs Dropout per metric, missing values dropped and counted."""
    rows = [r for r in rows if r.label in (COMEBACK, DROPOUT)]
    out = {}
    for k, m in enumerate(metrics):
        cb = [r.value(m) for r in rows if r.label == COMEBACK]
        do = [r.value(m) for r in rows if r.label == DROPOUT]
        x = [v for v in cb if v is not None]
        y = [v for v in do if v is not None]
        if len(x) < 2 or len(y) < 2:
            log.warning("metric %s: too few non-missing values for a comparison", m)
            continue
        out[m] = compare_groups(m, x, y, n_resamples=n_resamples, seed=seed + k,
                                n_missing=len(cb) + len(do) - len(x) - len(y))
    adjust_comparisons(list(out.values()))
    return out


def survival_block(rows: Iterable[FeatureRow], careers: Mapping[str, AuthorCareer]) -> dict:
    """Persistence curves for Comeback + Dropout authors.

    Duration is the career length in years (last - first + 1); the event is
    leaving the field, which is exactly the Dropout label.
    """
    rows = [r for r in rows if r.label in (COMEBACK, DROPOUT) and r.author_id in careers]

    def arrays(sel):
        d = np.array([careers[r.author_id].last_year - careers[r.author_id].first_year + 1 for r in sel], float)
        e = np.array([r.label == DROPOUT for r in sel], bool)
        return d, e

    block: dict[str, Any] = {"duration": "last_year - first_year + 1", "event": "Dropout"}
    cb = [r for r in rows if r.label == COMEBACK]
    do = [r for r in rows if r.label == DROPOUT]
    if cb and do:
        (d1, e1), (d2, e2) = arrays(cb), arrays(do)
        lr = log_rank(d1, e1, d2, e2)
        block["cohort_split"] = {
            "comeback": _curve_json(kaplan_meier(d1, e1)),
            "dropout": _curve_json(kaplan_meier(d2, e2)),
            "log_rank": _test_json(lr),
        }
    with_b = [r for r in rows if r.B is not None]
    if len(with_b) >= 2:
        med = float(np.median([r.B for r in with_b]))
        high = [r for r in with_b if r.B > med]
        low = [r for r in with_b if r.B <= med]
        if high and low:
            (d1, e1), (d2, e2) = arrays(high), arrays(low)
            lr = log_rank(d1, e1, d2, e2)
            block["bridging_split"] = {
                "median_B": med,
                "high": _curve_json(kaplan_meier(d1, e1)),
                "low": _curve_json(kaplan_meier(d2, e2)),
                "log_rank": _test_json(lr),
                # negative: fewer exits than expected in the high-B group
                "high_observed_minus_expected": lr.effect,
            }
    return block


def exit_decay_block(careers: Mapping[str, AuthorCareer]) -> dict:
    out = {}
    for label in (DROPOUT, COMEBACK, ACTIVE):
        series = career_exit_series(careers.values(), label)
        entry: dict[str, Any] = {"series": series}
        try:
            fit = fit_exponential_decay(series)
            entry["fit"] = {"p0": fit.p0, "lambda": fit.lam, "rmse": fit.rmse, "n_points": fit.n_points}
        except DataError:
            entry["fit"] = None
        out[label] = entry
    return out


def venue_block(corpus: Corpus, careers: Mapping[str, AuthorCareer]) -> dict:
    out = {}
    for label in (COMEBACK, DROPOUT, ACTIVE):
        venues = []
        for a, c in careers.items():
            if c.label != label or c.window is None or a not in corpus.author_index:
                continue
            venues.extend(corpus.papers[p].venue for p in papers_in_window(corpus.author_index[a], c.window))
        out[label] = venue_shares(venues)
    return out


def stats_report(rows: list[FeatureRow], careers: Mapping[str, AuthorCareer] | None = None,
                 corpus: Corpus | None = None, n_resamples: int = 10_000, seed: int = 0) -> dict:
    comps = compare_cohorts(rows, n_resamples, seed)
    pair = [r for r in rows if r.label in (COMEBACK, DROPOUT)
            and r.B is not None and r.XCC is not None]
    corr = {
        "n": len(pair),
        "spearman_B_XCC": spearman([r.B for r in pair], [r.XCC for r in pair]) if len(pair) >= 3 else None,
        "partial_spearman_B_XCC_given_P": (
            partial_spearman([r.B for r in pair], [r.XCC for r in pair], [r.P for r in pair])
            if len(pair) >= 3 else None),
    }
    report: dict[str, Any] = {
        "metrics": {m: comparison_json(c) for m, c in comps.items()},
        "correlations": corr,
        "n_rows": {lab: sum(r.label == lab for r in rows) for lab in (COMEBACK, DROPOUT, ACTIVE)},
    }
    if careers is not None:
        report["survival"] = survival_block(rows, careers)
        report["career_exit"] = exit_decay_block(careers)
        report["cohorts"] = cohort_summary(careers)
        if corpus is not None:
            report["venue_shares"] = venue_block(corpus, careers)
    return report


# ---------------------------------------------------------------- predict report

def prediction_report(rows: list[FeatureRow], sets=("baseline", "bridging"), models=("rf", "lr"),
                      folds: int = 5, seed: int = 0, threads: int = 1, shuffle_labels: bool = False,
                      model_config: Mapping | None = None, explain: bool = True) -> dict:
    unknown = set(sets) - set(FEATURE_SETS)
    if unknown:
        raise ParameterError(f"unknown feature sets {sorted(unknown)}")
    rows = [r for r in rows if r.label in (COMEBACK, DROPOUT)]
    res = ablation_run(rows, families=models, k=folds, seed=seed, threads=threads,
                       shuffle_labels=shuffle_labels, config_overrides=dict(model_config or {}),
                       explain=explain)
    results = {s: {m: res["results"][s][m].to_json() for m in models} for s in sets}
    report = {
        "n_rows": res["n_rows"], "n_dropped": res["n_dropped"],
        "n_comeback": res["n_comeback"], "n_dropout": res["n_dropout"],
        "folds": folds, "seed": seed, "shuffle_labels": shuffle_labels,
        "results": results,
    }
    if {"baseline", "bridging"} <= set(sets):
        report["auc_gap"] = {
            m: results["bridging"][m]["pooled"]["roc_auc"] - results["baseline"][m]["pooled"]["roc_auc"]
            for m in models
        }
    return report


# ---------------------------------------------------------------- pipeline

@dataclass
class PipelineConfig:
    out_dir: str = "run"
    corpus: str | None = None
    format: str = "jsonl"
    synth: dict = field(default_factory=dict)
    span: tuple[int, int] = DEFAULT_SPAN
    end_year: int | None = None
    gap: int = DEFAULT_GAP
    matched_dropout_length: int | None = None
    gamma: float = 1.0
    exclude_self_citations: bool = False
    ref_window: int | None = None
    citations_within_window: bool = False
    n_resamples: int = 10_000
    folds: int = 5
    models: tuple[str, ...] = ("rf", "lr")
    model: dict = field(default_factory=dict)
    explain: bool = True

    def __post_init__(self):
        self.span = tuple(self.span)
        self.models = tuple(self.models)
        if self.gamma <= 0:
            raise ParameterError("gamma must be positive")
        if self.gap < 1:
            raise ParameterError("gap must be >= 1")

    @classmethod
    def from_dict(cls, d: Mapping) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown pipeline config keys: {sorted(unknown)}")
        return cls(**d)

    @property
    def analysis_year(self) -> int:
        return self.end_year if self.end_year is not None else self.span[1]


ARTIFACTS = {
    "corpus": "corpus.jsonl",
    "cohorts": "cohorts.csv",
    "graph": "graph.csv",
    "partition": "partition.jsonl",
    "features": "features.csv",
    "stats": "stats.json",
    "predictions": "predictions.json",
}
DEPENDS = {
    "corpus": (),
    "cohorts": ("corpus",),
    "graph": ("corpus",),
    "partition": ("graph",),
    "features": ("corpus", "graph", "partition", "cohorts"),
    "stats": ("features", "cohorts", "corpus"),
    "predictions": ("features",),
}


def _stage_params(cfg: PipelineConfig, seed: int) -> dict[str, dict]:
    synth = dict(cfg.synth)
    synth.setdefault("seed", seed)
    synth.setdefault("span", list(cfg.span))
    return {
        "corpus": ({"corpus": cfg.corpus, "format": cfg.format, "span": list(cfg.span)}
                   if cfg.corpus else {"synth": SynthConfig.from_dict(synth).to_dict()}),
        "cohorts": {"end_year": cfg.analysis_year, "gap": cfg.gap,
                    "matched_dropout_length": cfg.matched_dropout_length},
        "graph": {"year": cfg.analysis_year, "exclude_self_citations": cfg.exclude_self_citations,
                  "ref_window": cfg.ref_window},
        "partition": {"gamma": cfg.gamma, "seed": seed},
        "features": {"citations_within_window": cfg.citations_within_window},
        "stats": {"n_resamples": cfg.n_resamples, "seed": seed},
        "predictions": {"folds": cfg.folds, "models": list(cfg.models), "model": cfg.model,
                        "explain": cfg.explain, "seed": seed},
    }


def _key(stage: str, params: dict, upstream: dict[str, str]) -> str:
    blob = json.dumps({"stage": stage, "params": params, "upstream": upstream, "version": __version__},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def run_pipeline(cfg: PipelineConfig, seed: int = 0, threads: int = 1, force: bool = False) -> dict:
    """Run every stage in dependency order, reusing cached artifacts.

    A stage is recomputed when its artifact or manifest is missing, when its
    cache key (parameters + upstream digests) changed, or when any upstream
    stage was recomputed in this run.  Returns {"ran": [...], "skipped": [...],
    "artifacts": {stage: path}}.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = _stage_params(cfg, seed)
    paths = {s: out / name for s, name in ARTIFACTS.items()}
    ran: list[str] = []
    skipped: list[str] = []
    cache: dict[str, Any] = {}

    def corpus_obj() -> Corpus:
        if "corpus" not in cache:
            cache["corpus"] = Corpus.read(paths["corpus"], "jsonl", tuple(cfg.span))
        return cache["corpus"]

    def build(stage: str) -> tuple[str, list]:
        if stage == "corpus":
            if cfg.corpus:
                records, stats = read_papers(cfg.corpus, cfg.format, tuple(cfg.span))
                log.info("ingest: %s", json.dumps(stats.to_json()))
                return dumps_papers(records), [cfg.corpus]
            records, truth = generate_corpus(SynthConfig.from_dict(params["corpus"]["synth"]))
            write_text(out / "truth.json", truth.to_json())
            return dumps_papers(records), []
        corpus = corpus_obj()
        if stage == "cohorts":
            careers = label_authors(corpus.author_index, cfg.analysis_year, cfg.gap,
                                    cfg.matched_dropout_length)
            return cohorts_csv(careers), [paths["corpus"]]
        if stage == "graph":
            opts = GraphOptions(cfg.exclude_self_citations, cfg.ref_window)
            return graph_csv(build_citation_graph(corpus, cfg.analysis_year, opts)), [paths["corpus"]]
        if stage == "partition":
            g = read_graph(paths["graph"])
            return partition_jsonl(louvain_partition(g, cfg.gamma, seed)), [paths["graph"]]
        if stage == "features":
            g = read_graph(paths["graph"], corpus)
            part = read_partition(paths["partition"])
            careers = read_cohorts(paths["cohorts"], corpus)
            rows = compute_features(careers, corpus.author_index, g, part,
                                    citations_within_window=cfg.citations_within_window,
                                    threads=threads)
            return features_csv(rows), [paths[s] for s in DEPENDS["features"]]
        if stage == "stats":
            rows = read_features(paths["features"])
            careers = read_cohorts(paths["cohorts"], corpus)
            report = stats_report(rows, careers, corpus, cfg.n_resamples, seed)
            return dumps_json(report), [paths[s] for s in DEPENDS["stats"]]
        if stage == "predictions":
            rows = read_features(paths["features"])
            report = prediction_report(rows, models=cfg.models, folds=cfg.folds, seed=seed,
                                       threads=threads, model_config=cfg.model, explain=cfg.explain)
            return dumps_json(report), [paths["features"]]
        raise ParameterError(f"unknown stage {stage}")

    for stage in ARTIFACTS:
        upstream = {d: sha256_file(paths[d]) for d in DEPENDS[stage]}
        key = _key(stage, params[stage], upstream)
        path, mpath = paths[stage], manifest_path(paths[stage])
        fresh = (
            not force
            and path.exists() and mpath.exists()
            and not any(d in ran for d in DEPENDS[stage])
        )
        if fresh:
            try:
                fresh = json.loads(mpath.read_text()).get("cache_key") == key
            except (OSError, json.JSONDecodeError):
                fresh = False
        if fresh:
            skipped.append(stage)
            continue
        started = time.time()
        try:
            text, inputs = build(stage)
        except ComebackError as exc:
            raise type(exc)(f"stage {stage} failed: {exc}") from exc
        write_text(path, text)
        if stage == "corpus":
            cache.pop("corpus", None)
        write_manifest(path, f"run:{stage}", params[stage], inputs, seed, started, cache_key=key)
        ran.append(stage)
        log.info("stage %s written to %s", stage, path)
    return {"ran": ran, "skipped": skipped, "artifacts": {s: str(p) for s, p in paths.items()}}
