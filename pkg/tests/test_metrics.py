import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from comeback.cohort import label_authors
from comeback.corpus import Corpus
from comeback.errors import DataError
from comeback.graph import CitationGraph, build_citation_graph
from comeback.metrics import (
    acc, bridging_score, career_exit_series, citation_counts, compute_features, fit_exponential_decay,
    gap_entropy, h_index, venue_shares, volume_metrics, xcc,
)

from conftest import paper


def toy_graph():
    # p1 (A) cites q1 (A) and q2 (B); p2 (B) cites q3 (B)
    g = CitationGraph.from_edges(["p1", "p2", "q1", "q2", "q3"], [("p1", "q1"), ("p1", "q2"), ("p2", "q3")])
    part = {"p1": 0, "q1": 0, "q2": 1, "p2": 1, "q3": 1}
    return g, part


def test_toy_bridging_and_xcc():
    g, part = toy_graph()
    assert bridging_score(["p1", "p2"], g, part) == 1 / 3
    assert xcc(["p1", "p2"], g, part) == 0.25


def test_bridging_extremes_and_missing():
    g, part = toy_graph()
    assert bridging_score(["p2"], g, part) == 0.0
    part2 = dict(part, q1=1)
    assert bridging_score(["p1"], g, part2) == 1.0
    assert xcc(["p1"], g, part2) == 1.0
    assert bridging_score(["q1"], g, part) is None
    assert xcc(["q1", "ghost"], g, part) is None


def test_bridging_permutation_invariant():
    g, part = toy_graph()
    swapped = {k: 1 - v for k, v in part.items()}
    assert bridging_score(["p1", "p2"], g, swapped) == bridging_score(["p1", "p2"], g, part)
    assert xcc(["p1", "p2"], g, swapped) == xcc(["p1", "p2"], g, part)


def test_bridging_monotone_in_added_edges():
    nodes = ["p", "a1", "a2", "b1", "b2", "b3"]
    base = [("p", "a1"), ("p", "b1")]
    part = {"p": 0, "a1": 0, "a2": 0, "b1": 1, "b2": 1, "b3": 1}
    b0 = bridging_score(["p"], CitationGraph.from_edges(nodes, base), part)
    up = bridging_score(["p"], CitationGraph.from_edges(nodes, base + [("p", "b2")]), part)
    down = bridging_score(["p"], CitationGraph.from_edges(nodes, base + [("p", "a2")]), part)
    assert down < b0 < up


def test_volume_metrics_counts_all_in_graph_citations():
    c = Corpus.from_records([
        paper("t", 2000, ("me",)),
        paper("c1", 2001, ("x",), refs=("t",)),
        paper("c2", 2002, ("x",), refs=("t",)),
        paper("c3", 2010, ("x",), refs=("t",)),
        paper("u", 2001, ("me",)),
    ])
    g = build_citation_graph(c, 2014)
    assert volume_metrics(["t", "u"], g) == (2, 3)
    assert volume_metrics([], g) == (0, 0)
    assert citation_counts(["t"], g, max_citer_year=2002) == [2]
    no_years = CitationGraph.from_edges(g.nodes, g.edges())
    with pytest.raises(DataError):
        citation_counts(["t"], no_years, max_citer_year=2002)


@pytest.mark.parametrize("counts, h", [([10, 8, 5, 4, 3], 4), ([0, 0, 0], 0), ([1], 1), ([], 0), ([5, 5, 5], 3)])
def test_h_index_examples(counts, h):
    assert h_index(counts) == h


@given(st.lists(st.integers(0, 30), max_size=25))
def test_h_index_oracle(counts):
    s = sorted(counts, reverse=True)
    h = max([i + 1 for i, c in enumerate(s) if c >= i + 1], default=0)
    assert h_index(counts) == h
    assert h <= len(counts) and h <= max(counts, default=0)


def test_acc():
    part = {"a": 0, "b": 0, "c": 1}
    assert acc(["a", "b", "c"], part) == 2
    assert acc(["a"], part) == 1
    assert acc([], part) == 0


def test_gap_entropy_examples():
    assert gap_entropy([2000, 2001, 2002]) == 0
    assert gap_entropy([2000, 2001, 2003]) == 1.0
    h = -(1 / 3) * math.log2(1 / 3) - (2 / 3) * math.log2(2 / 3)
    assert gap_entropy([2000, 2002, 2004, 2005]) == pytest.approx(h, abs=1e-12)
    assert abs(gap_entropy([2000, 2002, 2004, 2005]) - 0.9183) <= 1e-4
    assert gap_entropy([2000]) is None and gap_entropy([]) is None


@given(st.lists(st.integers(1900, 2000), min_size=2, max_size=12, unique=True), st.integers(-50, 50))
def test_gap_entropy_shift_invariant_and_nonnegative(years, shift):
    years = sorted(years)
    h = gap_entropy(years)
    assert h >= 0
    assert gap_entropy([y + shift for y in years]) == h


def test_venue_shares_examples():
    assert venue_shares(["Journal of X"])["Journal"] == 1.0
    s = venue_shares(["X Workshop", "Y Conference"])
    assert s["Workshop"] == 0.5 and s["Conference"] == 0.5
    s = venue_shares(["", "arXiv", "Z Symposium"])
    assert s["Other"] == pytest.approx(2 / 3) and s["Symposium"] == pytest.approx(1 / 3)
    assert sum(venue_shares(["Proc. conf.", "journal", "x"]).values()) == pytest.approx(1.0, abs=1e-9)
    assert set(venue_shares([]).values()) == {0.0}


def test_exponential_fit_exact_and_constant():
    fit = fit_exponential_decay([(t, math.exp(-0.5 * t)) for t in range(6)])
    assert fit.p0 == pytest.approx(1.0, abs=1e-12) and fit.lam == pytest.approx(0.5, abs=1e-12)
    assert fit.rmse < 1e-12
    fit = fit_exponential_decay([(t, 0.3) for t in range(5)])
    assert fit.lam == pytest.approx(0.0, abs=1e-12) and fit.p0 == pytest.approx(0.3)
    # non-positive points are excluded
    fit = fit_exponential_decay([(0, 1.0), (1, 0.0), (2, math.exp(-1.0))])
    assert fit.n_points == 2 and fit.lam == pytest.approx(0.5)
    with pytest.raises(DataError):
        fit_exponential_decay([(0, 1.0), (1, -1.0)])


def test_exponential_fit_recovers_rate_on_noisy_series():
    lams = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        t = np.arange(15)
        p = 0.5 * np.exp(-0.4 * t) * np.exp(rng.normal(0, 0.1, t.size))
        lams.append(fit_exponential_decay(zip(t, p)).lam)
    assert abs(np.median(lams) - 0.4) <= 0.05


def test_career_exit_series():
    from comeback.cohort import label_career
    cs = [label_career(a, ys, 2014) for a, ys in [("a", [2000, 2001]), ("b", [2000]), ("c", [2000, 2001])]]
    assert career_exit_series(cs, "Dropout") == [(1, 1 / 3), (2, 2 / 3)]
    assert career_exit_series(cs, "Comeback") == []


def test_feature_invariants_on_planted(planted):
    for r in planted.rows:
        assert r.h <= r.P and r.ACC <= r.P
        assert r.B is None or 0 <= r.B <= 1
        assert r.XCC is None or 0 <= r.XCC <= 1
        assert r.H_g is None or r.H_g >= 0
    ids = [r.author_id for r in planted.rows]
    assert ids == sorted(ids)


def test_acc_non_decreasing_as_window_widens(planted):
    from comeback.metrics import papers_in_window
    for a in list(planted.careers)[:200]:
        tl = planted.corpus.author_index[a]
        first = tl.years[0]
        prev = 0
        for end in range(first, 2015, 3):
            v = acc(papers_in_window(tl, (first, end)), planted.partition)
            assert v >= prev
            prev = v


def test_citations_within_window_flag(small_corpus):
    corpus, _ = small_corpus
    g = build_citation_graph(corpus, 2014)
    part = {p: 0 for p in g.nodes}
    careers = label_authors(corpus.author_index, 2014)
    full = compute_features(careers, corpus.author_index, g, part)
    cut = compute_features(careers, corpus.author_index, g, part, citations_within_window=True)
    assert all(b.C <= a.C for a, b in zip(full, cut))
    assert any(b.C < a.C for a, b in zip(full, cut))
    assert compute_features(careers, corpus.author_index, g, part, threads=4) == full
