"""Per-author bibliometric features measured inside an observation window.

Undefined values (no citation edges, fewer than two publication years) are
returned as ``None`` rather than zero, because zero is a legitimate value of
the bridging score, the cross-community rate and the gap entropy.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cohort import AuthorCareer
from .community import Partition
from .corpus import AuthorTimeline
from .errors import DataError, ParameterError
from .graph import CitationGraph

FEATURE_COLUMNS = ("P", "C", "h", "B", "ACC", "XCC", "H_g")
VENUE_TYPES = ("Other", "Conference", "Journal", "Workshop", "Symposium")


@dataclass(frozen=True)
class FeatureRow:
    author_id: str
    label: str
    P: int
    C: int
    h: int
    B: float | None
    ACC: int
    XCC: float | None
    H_g: float | None

    def value(self, column: str):
        return getattr(self, column)

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class ExponentialFit:
    p0: float
    lam: float
    rmse: float
    n_points: int

    def predict(self, t):
        return self.p0 * np.exp(-self.lam * np.asarray(t, dtype=float))


def _community(partition, pid):
    if isinstance(partition, Partition):
        return partition.assignment[pid]
    return partition[pid]


def papers_in_window(timeline: AuthorTimeline, window: tuple[int, int]) -> list[str]:
    lo, hi = window
    return [pid for pid, y in zip(timeline.paper_ids, timeline.paper_years) if lo <= y <= hi]


def citation_counts(
    paper_ids: Iterable[str],
    graph: CitationGraph,
    max_citer_year: int | None = None,
    in_adj: Sequence[Sequence[int]] | None = None,
) -> list[int]:
    """In-graph citations received by each paper.

    With ``max_citer_year`` only citing papers published up to that year
    count (needs ``graph.node_years``).
    """
    out = []
    if max_citer_year is None:
        for pid in paper_ids:
            i = graph.index.get(pid)
            out.append(0 if i is None else int(graph.in_degree[i]))
        return out
    if graph.node_years is None:
        raise DataError("graph carries no node years; cannot restrict citers")
    if in_adj is None:
        in_adj = graph.in_adjacency()
    years = graph.node_years
    for pid in paper_ids:
        i = graph.index.get(pid)
        out.append(0 if i is None else sum(1 for j in in_adj[i] if years[j] <= max_citer_year))
    return out


def volume_metrics(paper_ids: Sequence[str], graph: CitationGraph, **kwargs) -> tuple[int, int]:
    """Publication count and total citations received."""
    return len(paper_ids), sum(citation_counts(paper_ids, graph, **kwargs))


def h_index(citation_counts: Iterable[int]) -> int:
    counts = sorted(citation_counts, reverse=True)
    h = 0
    for rank, c in enumerate(counts, start=1):
        if c < 0:
            raise ParameterError("citation counts must be non-negative")
        if c >= rank:
            h = rank
        else:
            break
    return h


def _cross_counts(paper_ids, graph, partition):
    # (cross, total) in-graph references per paper that has a community
    for pid in paper_ids:
        i = graph.index.get(pid)
        if i is None:
            continue
        cp = _community(partition, pid)
        targets = graph.out_adj[i]
        cross = sum(1 for j in targets if _community(partition, graph.nodes[j]) != cp)
        yield cross, len(targets)


def bridging_score(paper_ids: Sequence[str], graph: CitationGraph, partition) -> float | None:
    """Share of all outgoing citation edges that leave the citing paper's community."""
    cross = total = 0
    for c, n in _cross_counts(paper_ids, graph, partition):
        cross += c
        total += n
    if total == 0:
        return None
    return cross / total


def xcc(paper_ids: Sequence[str], graph: CitationGraph, partition) -> float | None:
    """Per-paper cross-community reference share, averaged over papers with references."""
    shares = [c / n for c, n in _cross_counts(paper_ids, graph, partition) if n > 0]
    if not shares:
        return None
    return math.fsum(shares) / len(shares)


def acc(paper_ids: Sequence[str], partition) -> int:
    """Number of distinct communities among the author's papers."""
    return len({_community(partition, pid) for pid in paper_ids})


def gap_entropy(years: Sequence[int]) -> float | None:
    """Base-2 entropy of inter-publication gap lengths (1-year bins)."""
    years = sorted(set(years))
    if len(years) < 2:
        return None
    gaps = Counter(b - a for a, b in zip(years, years[1:]))
    n = len(years) - 1
    h = -math.fsum(c / n * math.log2(c / n) for c in gaps.values())
    return h if h > 0 else 0.0


def venue_type(venue: str) -> str:
    v = (venue or "").lower()
    if "journal" in v:
        return "Journal"
    if "workshop" in v:
        return "Workshop"
    if "symposium" in v:
        return "Symposium"
    if "conference" in v or "proceedings" in v or "conf." in v:
        return "Conference"
    return "Other"


def venue_shares(venues: Iterable[str]) -> dict[str, float]:
    counts = Counter(venue_type(v) for v in venues)
    n = sum(counts.values())
    return {t: (counts[t] / n if n else 0.0) for t in VENUE_TYPES}


def fit_exponential_decay(series: Iterable[tuple[float, float]]) -> ExponentialFit:
    """Least-squares fit of ``p0 * exp(-lam * t)`` on the log scale.

    Points with non-positive ``p`` are dropped; RMSE is in the original scale.
    """
    pts = [(float(t), float(p)) for t, p in series if p > 0]
    if len(pts) < 2 or len({t for t, _ in pts}) < 2:
        raise DataError("need at least two positive points at distinct t")
    t = np.array([a for a, _ in pts])
    p = np.array([b for _, b in pts])
    slope, intercept = np.polyfit(t, np.log(p), 1)
    fit = ExponentialFit(float(np.exp(intercept)), float(-slope), 0.0, len(pts))
    rmse = float(np.sqrt(np.mean((fit.predict(t) - p) ** 2)))
    return ExponentialFit(fit.p0, fit.lam, rmse, len(pts))


def feature_row(
    career: AuthorCareer,
    timeline: AuthorTimeline,
    graph: CitationGraph,
    partition,
    citations_within_window: bool = False,
    in_adj=None,
) -> FeatureRow:
    if career.window is None:
        raise DataError(f"author {career.author_id} has no observation window")
    pids = papers_in_window(timeline, career.window)
    counts = citation_counts(
        pids, graph,
        max_citer_year=career.window[1] if citations_within_window else None,
        in_adj=in_adj,
    )
    lo, hi = career.window
    years = [y for y in timeline.years if lo <= y <= hi]
    return FeatureRow(
        author_id=career.author_id,
        label=career.label,
        P=len(pids),
        C=sum(counts),
        h=h_index(counts),
        B=bridging_score(pids, graph, partition),
        ACC=acc(pids, partition),
        XCC=xcc(pids, graph, partition),
        H_g=gap_entropy(years),
    )


def compute_features(
    careers: Mapping[str, AuthorCareer],
    author_index: Mapping[str, AuthorTimeline],
    graph: CitationGraph,
    partition,
    labels: Iterable[str] | None = None,
    citations_within_window: bool = False,
    threads: int = 1,
) -> list[FeatureRow]:
    """Feature rows for every labeled author, sorted by author id."""
    wanted = None if labels is None else set(labels)
    ids = [a for a in sorted(careers) if wanted is None or careers[a].label in wanted]
    in_adj = graph.in_adjacency() if citations_within_window else None

    def one(a):
        return feature_row(careers[a], author_index[a], graph, partition, citations_within_window, in_adj)

    if threads <= 1:
        return [one(a) for a in ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, so output is independent of scheduling
        return list(pool.map(one, ids))


def career_exit_series(careers: Iterable[AuthorCareer], label: str) -> list[tuple[int, float]]:
    """Empirical probability that a career of ``label`` ends in year index t.

    Year index counts from 1 at the first publication year; the value at t is
    the share of authors whose last publication falls in their t-th year.
    """
    lengths = [c.last_year - c.first_year + 1 for c in careers if c.label == label]
    if not lengths:
        return []
    n = len(lengths)
    counts = Counter(lengths)
    return [(t, counts[t] / n) for t in range(1, max(lengths) + 1)]
