"""Louvain community detection and modularity on symmetrized citation graphs.

The citation graph is treated as undirected with unit weights; a pair of
papers citing each other counts as one edge.  The optimizer is the usual
two-phase loop: greedy single-node moves until no move helps, then collapse
communities into super-nodes and repeat on the smaller graph.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, ParameterError
from .graph import CitationGraph

SWEEP_TOL = 1e-7


@dataclass
class Partition:
    assignment: dict[str, int]
    resolution: float
    seed: int
    modularity_value: float
    history: list[float] = field(default_factory=list)

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def __getitem__(self, paper_id: str) -> int:
        return self.assignment[paper_id]

    def get(self, paper_id: str, default=None):
        return self.assignment.get(paper_id, default)


def _dense_labels(labels: Sequence[int]) -> list[int]:
    """Renumber so ids are 0..k-1 in order of first appearance."""
    remap: dict[int, int] = {}
    out = []
    for c in labels:
        if c not in remap:
            remap[c] = len(remap)
        out.append(remap[c])
    return out


def _modularity_weighted(nbrs, wts, self_w, labels, resolution) -> float:
    two_m = 0.0
    internal: Counter = Counter()
    degree: Counter = Counter()
    for i, (ns, ws) in enumerate(zip(nbrs, wts)):
        ci = labels[i]
        k = 2.0 * self_w[i]
        internal[ci] += 2.0 * self_w[i]
        for j, w in zip(ns, ws):
            k += w
            if labels[j] == ci:
                internal[ci] += w
        degree[ci] += k
        two_m += k
    if two_m == 0:
        return 0.0
    q = 0.0
    for c in degree:
        q += internal[c] / two_m - resolution * (degree[c] / two_m) ** 2
    return q


def _one_level(nbrs, wts, self_w, resolution, rng) -> tuple[list[int], bool]:
    n = len(nbrs)
    k = [2.0 * self_w[i] + math.fsum(wts[i]) for i in range(n)]
    two_m = math.fsum(k)
    comm = list(range(n))
    if two_m == 0:
        return comm, False
    m = two_m / 2.0
    tot = list(k)
    order = [int(i) for i in rng.permutation(n)]
    # fixed shuffled neighbour order per level: decides ties between communities
    shuffled = []
    for i in range(n):
        perm = rng.permutation(len(nbrs[i]))
        shuffled.append(([nbrs[i][p] for p in perm], [wts[i][p] for p in perm]))
    moved_any = False
    scale = resolution / two_m
    while True:
        moves = 0
        gain_sum = 0.0
        for i in order:
            ci = comm[i]
            ki = k[i]
            links: dict[int, float] = {}
            ns, ws = shuffled[i]
            for j, w in zip(ns, ws):
                c = comm[j]
                links[c] = links.get(c, 0.0) + w
            tot[ci] -= ki
            own_gain = links.get(ci, 0.0) - tot[ci] * ki * scale
            best, best_gain = ci, own_gain
            for c, w in links.items():
                if c == ci:
                    continue
                g = w - tot[c] * ki * scale
                if g > best_gain:
                    best, best_gain = c, g
            tot[best] += ki
            if best != ci:
                comm[i] = best
                moves += 1
                gain_sum += (best_gain - own_gain) / m
        if moves:
            moved_any = True
        if moves == 0 or gain_sum < SWEEP_TOL:
            break
    return comm, moved_any


def _aggregate(nbrs, wts, self_w, comm):
    labels = _dense_labels(comm)
    n_new = max(labels) + 1
    new_self = [0.0] * n_new
    new_adj: list[dict[int, float]] = [dict() for _ in range(n_new)]
    for i, (ns, ws) in enumerate(zip(nbrs, wts)):
        ci = labels[i]
        new_self[ci] += self_w[i]
        for j, w in zip(ns, ws):
            cj = labels[j]
            if ci == cj:
                # each undirected edge is seen from both ends
                new_self[ci] += w / 2.0
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
    new_nbrs = [sorted(d) for d in new_adj]
    new_wts = [[d[j] for j in ns] for d, ns in zip(new_adj, new_nbrs)]
    return labels, new_nbrs, new_wts, new_self


def louvain(
    neighbors: Sequence[Sequence[int]],
    resolution: float = 1.0,
    seed: int = 0,
) -> tuple[list[int], list[float]]:
    """Louvain on an undirected unit-weight graph given as neighbour lists.

    Returns dense community labels per node and the modularity reached after
    each outer (move + aggregate) iteration.
    """
    if resolution <= 0:
        raise ParameterError("resolution must be > 0")
    rng = np.random.default_rng(seed)
    nbrs = [list(ns) for ns in neighbors]
    wts = [[1.0] * len(ns) for ns in nbrs]
    self_w = [0.0] * len(nbrs)
    membership = list(range(len(nbrs)))
    history: list[float] = []
    level_nbrs, level_wts, level_self = nbrs, wts, self_w
    while True:
        comm, moved = _one_level(level_nbrs, level_wts, level_self, resolution, rng)
        if not moved:
            break
        labels, level_nbrs, level_wts, level_self = _aggregate(level_nbrs, level_wts, level_self, comm)
        membership = [labels[c] for c in membership]
        history.append(_modularity_weighted(nbrs, wts, self_w, membership, resolution))
        if len(level_nbrs) == 1:
            break
    membership = _canonical(membership)
    if not history:
        history.append(_modularity_weighted(nbrs, wts, self_w, membership, resolution))
    return membership, history


def _canonical(labels: Sequence[int]) -> list[int]:
    # ids ordered by the lowest node index in each community
    return _dense_labels(labels)


def louvain_partition(graph: CitationGraph, resolution: float = 1.0, seed: int = 0) -> Partition:
    if graph.n_nodes == 0:
        raise DataError("cannot partition an empty graph")
    labels, history = louvain(graph.undirected_adjacency(), resolution, seed)
    assignment = {pid: labels[i] for i, pid in enumerate(graph.nodes)}
    return Partition(
        assignment=assignment,
        resolution=resolution,
        seed=seed,
        modularity_value=modularity(graph, assignment, resolution),
        history=history,
    )


def modularity(graph: CitationGraph, partition: Mapping[str, int] | Partition, resolution: float = 1.0) -> float:
    """Newman-Girvan modularity with resolution on the symmetrized graph.

    ``Q = sum_c [e_c / m - resolution * (d_c / 2m)^2]``; zero when the graph
    has no edges.
    """
    if isinstance(partition, Partition):
        partition = partition.assignment
    adj = graph.undirected_adjacency()
    m = sum(len(ns) for ns in adj) / 2
    if m == 0:
        return 0.0
    try:
        labels = [partition[pid] for pid in graph.nodes]
    except KeyError as exc:
        raise DataError(f"partition does not cover node {exc.args[0]!r}") from None
    internal: Counter = Counter()
    degree: Counter = Counter()
    for i, ns in enumerate(adj):
        c = labels[i]
        degree[c] += len(ns)
        internal[c] += sum(1 for j in ns if labels[j] == c)
    return math.fsum(internal[c] / 2 / m - resolution * (degree[c] / (2 * m)) ** 2 for c in degree)


def normalized_mutual_info(a: Sequence, b: Sequence) -> float:
    """NMI with arithmetic-mean normalization; 1.0 when both are trivial."""
    if len(a) != len(b):
        raise ParameterError("label vectors differ in length")
    n = len(a)
    if n == 0:
        raise ParameterError("empty label vectors")
    ca, cb, cab = Counter(a), Counter(b), Counter(zip(a, b))

    def entropy(counts):
        return -sum(v / n * math.log(v / n) for v in counts.values())

    ha, hb = entropy(ca), entropy(cb)
    if ha == 0 and hb == 0:
        return 1.0
    mi = sum(v / n * math.log(v * n / (ca[x] * cb[y])) for (x, y), v in cab.items())
    return max(0.0, min(1.0, 2 * mi / (ha + hb)))
