import io
import json

import pytest
from hypothesis import given, strategies as st

from comeback.corpus import (
    Corpus, build_author_index, dumps_papers, explode_authorship, normalize_references,
    parse_papers, read_papers,
)
from comeback.errors import DataError, ParameterError
from comeback.synth import SynthConfig, generate_corpus

from conftest import paper


def jl(**kw):
    return json.dumps(kw)


def test_three_wellformed_lines():
    lines = [jl(id=f"p{i}", title="t", authors=["a"], year=2000, venue="", references=[]) for i in range(3)]
    recs, stats = parse_papers(lines)
    assert len(recs) == 3 and stats.dropped == 0


def test_missing_year_dropped():
    lines = [
        jl(id="p1", authors=["a"], year=2000),
        jl(id="p2", authors=["a"]),
        jl(id="p3", authors=["a"], year=2001),
    ]
    recs, stats = parse_papers(lines)
    assert [r.paper_id for r in recs] == ["p1", "p3"]
    assert stats.missing_fields == 1 and stats.dropped == 1


def test_malformed_lines_are_counted_not_fatal():
    lines = ["{not json", "[1,2]", jl(id="p1", year=2000), ""]
    recs, stats = parse_papers(lines)
    assert len(recs) == 1 and stats.malformed == 2


def test_out_of_span_dropped_not_clamped():
    recs, stats = parse_papers([jl(id="a", year=1970), jl(id="b", year=1990)])
    assert [r.paper_id for r in recs] == ["b"] and stats.out_of_span == 1
    recs, _ = parse_papers([jl(id="a", year=1970)], span=None)
    assert recs[0].year == 1970


def test_duplicate_ids_first_wins():
    recs, stats = parse_papers([jl(id="a", year=1990, title="first"), jl(id="a", year=1991)])
    assert recs[0].title == "first" and stats.duplicate_id == 1


def test_self_reference_removed_and_authors_deduplicated():
    recs, _ = parse_papers([jl(id="p1", year=2000, authors=["x", "y", "x"], references="p1; p2,p2 p3")])
    assert recs[0].references == ("p2", "p3")
    assert recs[0].author_ids == ("x", "y")


def test_unreadable_stream_is_fatal(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_bytes(b"\xff\xfe\x00garbage\n")
    with pytest.raises(DataError):
        read_papers(bad)
    with pytest.raises(DataError):
        read_papers(tmp_path / "missing.jsonl")


def test_unknown_format():
    with pytest.raises(ParameterError):
        parse_papers([], format="bibtex")


def test_aminer_format():
    text = """#*Paper one
#@Alice;Bob
#t2001
#cJournal of Things
#index1
#%7
#%8

#*Paper two
#@Carol
#t2003
#index2
#%1
#*Paper three without year
#index3
"""
    recs, stats = parse_papers(io.StringIO(text), format="aminer")
    by = {r.paper_id: r for r in recs}
    assert set(by) == {"1", "2"}
    assert by["1"].author_ids == ("Alice", "Bob") and by["1"].references == ("7", "8")
    assert by["1"].venue == "Journal of Things"
    assert by["2"].references == ("1",)
    assert stats.missing_fields == 1


@pytest.mark.parametrize("raw, expected", [
    ("p1; p2, p3", ["p1", "p2", "p3"]),
    ("", []),
    ("p1;p1, p1", ["p1"]),
    (None, []),
    ([" a ", "b;c", "a"], ["a", "b", "c"]),
    ("  ;; ,, ", []),
])
def test_normalize_references(raw, expected):
    assert normalize_references(raw) == expected


@given(st.lists(st.sampled_from(["a", "b", "c", "d1", "x_y"]), max_size=12),
       st.lists(st.sampled_from([",", ";", " ", "; ", " ,\t"]), min_size=1))
def test_normalize_matches_set_of_tokens(tokens, seps):
    raw = "".join(t + seps[i % len(seps)] for i, t in enumerate(tokens))
    out = normalize_references(raw)
    assert out == list(dict.fromkeys(tokens))


def test_explode_authorship_counts():
    p1 = paper("p1", 2000, authors=("a", "b", "c"))
    assert len(explode_authorship([p1])) == 3
    p2 = paper("p2", 2001, authors=("a",))
    tuples = explode_authorship([p1, p2])
    assert sum(t.author_id == "a" for t in tuples) == 2
    assert explode_authorship([paper("p3", 2000, authors=())]) == []


def test_author_index_sorts_and_dedups_years():
    recs = [paper("p1", 2003), paper("p2", 2001), paper("p3", 2001)]
    idx = build_author_index(explode_authorship(recs))
    assert idx["a"].years == (2001, 2003)
    assert sorted(idx["a"].paper_ids) == ["p1", "p2", "p3"]
    assert "zz" not in idx


def test_synthetic_round_trip_and_counts():
    records, truth = generate_corpus(SynthConfig(n_authors=60, n_communities=3,
                                                 papers_per_community_per_year=6, seed=4))
    records = records[:1000]
    text = dumps_papers(records)
    again, stats = parse_papers(text.splitlines())
    assert again == sorted(records, key=lambda r: r.paper_id) and stats.dropped == 0
    assert dumps_papers(again) == text
    tuples = explode_authorship(again)
    assert len(tuples) == sum(len(set(r.author_ids)) for r in again)
    idx = build_author_index(tuples)
    assert sum(len(e.paper_ids) for e in idx.values()) == len(tuples)


def test_author_index_matches_generator_bookkeeping(small_corpus):
    corpus, truth = small_corpus
    for a, info in truth.authors.items():
        assert len(corpus.author_index[a].paper_ids) == info["n_papers"]


def test_corpus_helpers():
    c = Corpus.from_records([paper("p1", 2000, ("a", "b")), paper("p2", 2001, ("b",), refs=("p1", "zz")),
                             paper("p3", 2002, ("c",), refs=("p1",))])
    assert c.span == (2000, 2002)
    assert c.self_citation_flags("p2") == (True, False)
    assert c.self_citation_flags("p3") == (False,)
    assert set(c.authors()) == {"a", "b", "c"}
    d = c.without_authorships([("b", "p2")])
    assert d.papers["p2"].author_ids == () and d.author_index["b"].paper_ids == ("p1",)
    with pytest.raises(DataError):
        Corpus.from_records([paper("p1", 2000), paper("p1", 2001)])
