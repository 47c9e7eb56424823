import itertools

import numpy as np
import pytest
from sklearn.metrics import normalized_mutual_info_score

from comeback.community import louvain, louvain_partition, modularity, normalized_mutual_info
from comeback.errors import DataError, ParameterError
from comeback.graph import CitationGraph


def two_triangles():
    return CitationGraph.from_edges(range(6), [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])


def brute_q(n, edges, labels, gamma=1.0):
    """Modularity from the adjacency-matrix definition."""
    A = np.zeros((n, n))
    for u, v in edges:
        A[u, v] = A[v, u] = 1
    k = A.sum(1)
    m2 = A.sum()
    same = np.equal.outer(labels, labels)
    return float(((A - gamma * np.outer(k, k) / m2) * same).sum() / m2)


def set_partitions(n):
    """All labelings in restricted-growth form (Bell(n) of them)."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield list(prefix)
            return
        for c in range(top + 2):
            yield from rec(prefix + [c], max(top, c))
    yield from rec([0], 0)


def sbm(rng, blocks=4, size=50, p_in=0.3, p_out=0.01):
    n = blocks * size
    truth = np.repeat(np.arange(blocks), size)
    probs = np.where(np.equal.outer(truth, truth), p_in, p_out)
    upper = np.triu(rng.random((n, n)) < probs, 1)
    edges = list(zip(*np.nonzero(upper)))
    return CitationGraph.from_edges(range(n), [(int(u), int(v)) for u, v in edges]), truth


def test_two_triangles_q_half():
    g = two_triangles()
    assert abs(modularity(g, {i: i // 3 for i in range(6)}) - 0.5) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_two_triangles_found_for_any_seed(seed):
    p = louvain_partition(two_triangles(), 1.0, seed)
    assert [p[i] for i in range(6)] == [0, 0, 0, 1, 1, 1]


@pytest.mark.parametrize("edges", [
    [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)],
    [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)],
    [(0, 1), (0, 2), (0, 3), (4, 5), (3, 4)],
    [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)],
])
def test_louvain_reaches_exhaustive_optimum_on_six_nodes(edges):
    best = max(brute_q(6, edges, np.array(lab)) for lab in set_partitions(6))
    g = CitationGraph.from_edges(range(6), edges)
    for seed in range(3):
        p = louvain_partition(g, 1.0, seed)
        assert p.modularity_value == pytest.approx(best, abs=1e-12)


def test_modularity_matches_matrix_definition():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = 9
        edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < 0.35]
        if not edges:
            continue
        labels = rng.integers(0, 3, n)
        gamma = float(rng.uniform(0.5, 1.5))
        g = CitationGraph.from_edges(range(n), edges)
        assert modularity(g, dict(enumerate(labels.tolist())), gamma) == pytest.approx(
            brute_q(n, edges, labels, gamma), abs=1e-12)


def test_modularity_special_partitions():
    g = two_triangles()
    assert modularity(g, {i: 0 for i in range(6)}) == pytest.approx(0.0, abs=1e-15)
    singles = modularity(g, {i: i for i in range(6)}, 1.3)
    assert singles == pytest.approx(-1.3 * 6 * (2 / 12) ** 2) and singles <= 0
    empty = CitationGraph.from_edges(["x", "y"], [])
    assert modularity(empty, {"x": 0, "y": 0}) == 0.0
    with pytest.raises(DataError):
        modularity(g, {0: 0})


def test_single_node_and_isolates():
    p = louvain_partition(CitationGraph.from_edges(["solo"], []), 1.0, 0)
    assert p.assignment == {"solo": 0}
    g = CitationGraph.from_edges(range(8), [(0, 1), (1, 2), (2, 0)])
    p = louvain_partition(g, 1.0, 1)
    others = [p[i] for i in range(3, 8)]
    assert len(set(others)) == 5 and p[0] not in others


def test_invalid_inputs():
    with pytest.raises(ParameterError):
        louvain_partition(two_triangles(), 0.0, 0)
    with pytest.raises(DataError):
        louvain_partition(CitationGraph.from_edges([], []), 1.0, 0)


def test_planted_blocks_recovered():
    rng = np.random.default_rng(123)
    g, truth = sbm(rng)
    p = louvain_partition(g, 1.0, 0)
    assert normalized_mutual_info(truth, [p[i] for i in range(g.n_nodes)]) >= 0.9


def test_deterministic_and_monotone():
    g, _ = sbm(np.random.default_rng(5), p_out=0.03)
    a = louvain_partition(g, 1.0, 42)
    b = louvain_partition(g, 1.0, 42)
    assert a.assignment == b.assignment and a.history == b.history
    assert all(y >= x - 1e-12 for x, y in zip(a.history, a.history[1:]))
    assert a.history[-1] == pytest.approx(a.modularity_value, abs=1e-12)
    labels = sorted(set(a.assignment.values()))
    assert labels == list(range(len(labels)))


def test_resolution_sweep_community_counts():
    # flagged property: more communities at higher resolution on these graphs
    g, _ = sbm(np.random.default_rng(9), blocks=3, size=30, p_in=0.2, p_out=0.05)
    counts = [louvain_partition(g, gamma, 0).n_communities for gamma in (0.5, 1.0, 2.0, 4.0)]
    assert counts == sorted(counts)


def test_nmi_matches_sklearn():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 60))
        a = rng.integers(0, int(rng.integers(1, 6)), n)
        b = rng.integers(0, int(rng.integers(1, 6)), n)
        ours = normalized_mutual_info(a.tolist(), b.tolist())
        assert ours == pytest.approx(normalized_mutual_info_score(a, b), abs=1e-10)


def test_louvain_raw_interface():
    labels, history = louvain([[1], [0], [3], [2]], 1.0, 0)
    assert labels == [0, 0, 1, 1] and history[-1] == pytest.approx(0.5)
