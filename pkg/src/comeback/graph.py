"""Cumulative citation graphs.

A :class:`CitationGraph` holds every paper published up to a cutoff year and
the directed citing -> cited edges among them.  Nodes are kept in sorted id
order and addressed internally by integer position.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .errors import ParameterError


@dataclass(frozen=True)
class GraphOptions:
    exclude_self_citations: bool = False
    reference_window_years: int | None = None

    def __post_init__(self):
        k = self.reference_window_years
        if k is not None and k < 0:
            raise ParameterError("reference window must be >= 0")


@dataclass
class CitationGraph:
    year_cutoff: int
    nodes: tuple[str, ...]
    out_adj: list[list[int]]
    options: GraphOptions = field(default_factory=GraphOptions)
    node_years: tuple[int, ...] | None = None

    def __post_init__(self):
        self.index = {pid: i for i, pid in enumerate(self.nodes)}
        indeg = np.zeros(len(self.nodes), dtype=np.int64)
        for targets in self.out_adj:
            for j in targets:
                indeg[j] += 1
        self.in_degree = indeg

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(t) for t in self.out_adj)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self.index

    def edges(self) -> list[tuple[str, str]]:
        """Edge list in (citing, cited) id order."""
        nodes = self.nodes
        return [(nodes[i], nodes[j]) for i, targets in enumerate(self.out_adj) for j in targets]

    def in_adjacency(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in self.nodes]
        for i, targets in enumerate(self.out_adj):
            for j in targets:
                inc[j].append(i)
        return inc

    def references_of(self, paper_id: str) -> list[str]:
        i = self.index.get(paper_id)
        if i is None:
            return []
        return [self.nodes[j] for j in self.out_adj[i]]

    def undirected_adjacency(self) -> list[list[int]]:
        """Symmetrized, unit-weight neighbour lists; parallel pairs collapse."""
        nbrs = [set() for _ in self.nodes]
        for i, targets in enumerate(self.out_adj):
            for j in targets:
                if i != j:
                    nbrs[i].add(j)
                    nbrs[j].add(i)
        return [sorted(s) for s in nbrs]

    @classmethod
    def from_edges(cls, nodes, edges, year_cutoff=0, options=None) -> "CitationGraph":
        nodes = tuple(sorted(set(nodes)))
        index = {pid: i for i, pid in enumerate(nodes)}
        out: list[set[int]] = [set() for _ in nodes]
        for u, v in edges:
            if u != v:
                out[index[u]].add(index[v])
        return cls(year_cutoff, nodes, [sorted(s) for s in out], options or GraphOptions())


def build_citation_graph(corpus: Corpus, t: int, options: GraphOptions | None = None) -> CitationGraph:
    """Graph of papers with year <= ``t`` and the citations among them.

    References to papers outside the node set are silently skipped.  With
    ``exclude_self_citations`` an edge is dropped when the two papers share
    an author; with a reference window ``k`` only pairs at most ``k`` years
    apart are kept.
    """
    options = options or GraphOptions()
    papers = corpus.papers
    nodes = tuple(pid for pid, p in papers.items() if p.year <= t)
    index = {pid: i for i, pid in enumerate(nodes)}
    window = options.reference_window_years
    out_adj: list[list[int]] = []
    for pid in nodes:
        p = papers[pid]
        authors = set(p.author_ids) if options.exclude_self_citations else None
        targets = set()
        for q in p.references:
            j = index.get(q)
            if j is None or q == pid:
                continue
            cited = papers[q]
            if window is not None and abs(p.year - cited.year) > window:
                continue
            if authors is not None and not authors.isdisjoint(cited.author_ids):
                continue
            targets.add(j)
        out_adj.append(sorted(targets))
    return CitationGraph(t, nodes, out_adj, options, tuple(papers[pid].year for pid in nodes))
