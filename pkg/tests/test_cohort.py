import pytest
from hypothesis import given, strategies as st

from comeback.cohort import (
    ACTIVE, COMEBACK, DROPOUT, classify_author, cohort_summary, label_authors, label_career,
    max_gap, mean_comeback_window_length, observation_window,
)
from comeback.corpus import Corpus
from comeback.errors import DataError, ParameterError
from comeback.synth import SynthConfig, generate_corpus

years_st = st.lists(st.integers(1980, 2014), min_size=1, max_size=15, unique=True).map(sorted)


@pytest.mark.parametrize("years, g", [([2000, 2001, 2002], 1), ([2000, 2004, 2005], 4), ([2000], 0), ([], 0)])
def test_max_gap_examples(years, g):
    assert max_gap(years) == g


@given(years_st)
def test_max_gap_brute_force(years):
    pairs = [b - a for a, b in zip(years, years[1:])]
    assert max_gap(years) == (max(pairs) if pairs else 0)


@pytest.mark.parametrize("years, label", [
    ([2000, 2005], COMEBACK),
    ([2000, 2001], DROPOUT),
    ([2010, 2011, 2012, 2013], ACTIVE),
    # internal gap and trailing silence: the gap wins
    ([1990, 1995, 1996], COMEBACK),
    ([1990, 1991, 1992], DROPOUT),
    ([2000, 2003, 2014], COMEBACK),
    ([2012], ACTIVE),
    ([2011], DROPOUT),
])
def test_classify_examples(years, label):
    assert classify_author(years, 2014) == label


def test_classify_errors():
    with pytest.raises(DataError):
        classify_author([], 2014)
    with pytest.raises(ParameterError):
        classify_author([2015], 2014)


@given(years_st, st.integers(1, 6))
def test_labels_are_exclusive_and_consistent(years, thr):
    label = classify_author(years, 2014, thr)
    trailing = 2014 - years[-1] >= thr
    internal = max_gap(years) >= thr
    assert label == (COMEBACK if internal else DROPOUT if trailing else ACTIVE)


def test_earliest_maximal_gap_defines_return():
    c = label_career("a", [2000, 2004, 2005, 2009, 2013], 2014)
    assert c.label == COMEBACK and c.gap_start_year == 2000 and c.return_year == 2004


@pytest.mark.parametrize("years, matched, window", [
    ([2000, 2001, 2006], None, (2000, 2005)),
    ([1995, 1997, 1999, 2001, 2003, 2005], 6, (2000, 2005)),
    ([2003, 2005], 6, (2003, 2005)),
    ([2003, 2005], None, (2003, 2005)),
    ([2012, 2013], None, (2012, 2014)),
])
def test_observation_window(years, matched, window):
    c = label_career("a", years, 2014)
    w = observation_window(c, matched)
    assert w == window and w[0] <= w[1]
    if c.label == COMEBACK:
        assert w[1] < c.return_year


def test_observation_window_bad_length():
    c = label_career("a", [2000, 2001], 2014)
    with pytest.raises(ParameterError):
        observation_window(c, 0)


def test_label_authors_matches_plant_and_mean_window():
    records, truth = generate_corpus(SynthConfig(
        n_authors=1000, seed=5, cohort_mix={COMEBACK: 0.1, DROPOUT: 0.6, ACTIVE: 0.3}))
    corpus = Corpus.from_records(records)
    careers = label_authors(corpus.author_index, 2014)
    planted = truth.labels()
    agree = sum(careers[a].label == lab for a, lab in planted.items()) / len(planted)
    assert agree >= 0.99
    m = mean_comeback_window_length(careers)
    cb = [c for c in careers.values() if c.label == COMEBACK]
    assert m == int(sum(c.return_year - c.first_year for c in cb) / len(cb) + 0.5)
    for c in careers.values():
        if c.label == DROPOUT:
            assert c.window[1] == c.last_year and c.window[1] - c.window[0] + 1 <= m
    s = cohort_summary(careers)
    assert s["counts"][COMEBACK] == len(cb)
    assert s["mean_comeback_max_gap"] == pytest.approx(sum(c.max_gap for c in cb) / len(cb))
