"""Career labeling (Comeback / Dropout / Active) and observation windows."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .corpus import AuthorTimeline
from .errors import DataError, ParameterError

COMEBACK = "Comeback"
DROPOUT = "Dropout"
ACTIVE = "Active"
LABELS = (COMEBACK, DROPOUT, ACTIVE)
DEFAULT_GAP = 3


@dataclass(frozen=True)
class AuthorCareer:
    author_id: str
    years: tuple[int, ...]
    max_gap: int
    label: str
    dataset_end_year: int
    gap_start_year: int | None = None  # last publication year before the gap
    return_year: int | None = None
    window: tuple[int, int] | None = None

    @property
    def first_year(self) -> int:
        return self.years[0]

    @property
    def last_year(self) -> int:
        return self.years[-1]

    @property
    def window_length(self) -> int | None:
        if self.window is None:
            return None
        return self.window[1] - self.window[0] + 1


def max_gap(years: Sequence[int]) -> int:
    """Largest difference between consecutive sorted years; 0 below two years."""
    if len(years) < 2:
        return 0
    return max(b - a for a, b in zip(years, years[1:]))


def _maximal_gap_position(years: Sequence[int]) -> int:
    # earliest index i where years[i+1] - years[i] is maximal
    g = max_gap(years)
    for i, (a, b) in enumerate(zip(years, years[1:])):
        if b - a == g:
            return i
    raise AssertionError("unreachable")


def classify_author(years: Sequence[int], dataset_end_year: int, gap_threshold: int = DEFAULT_GAP) -> str:
    """Label one publication timeline.

    A maximal gap of at least ``gap_threshold`` is always followed by a
    publication, so it makes a Comeback even when the author later falls
    silent.  Otherwise trailing silence of at least ``gap_threshold`` years
    up to the dataset end makes a Dropout; everyone else is Active.
    """
    if not years:
        raise DataError("cannot classify an empty timeline")
    years = sorted(set(years))
    if dataset_end_year < years[-1]:
        raise ParameterError("dataset end precedes last publication")
    if max_gap(years) >= gap_threshold:
        return COMEBACK
    if dataset_end_year - years[-1] >= gap_threshold:
        return DROPOUT
    return ACTIVE


def label_career(
    author_id: str,
    years: Sequence[int],
    dataset_end_year: int,
    gap_threshold: int = DEFAULT_GAP,
) -> AuthorCareer:
    years = tuple(sorted(set(years)))
    label = classify_author(years, dataset_end_year, gap_threshold)
    g = max_gap(years)
    gap_start = ret = None
    if label == COMEBACK:
        i = _maximal_gap_position(years)
        gap_start, ret = years[i], years[i + 1]
    return AuthorCareer(author_id, years, g, label, dataset_end_year, gap_start, ret)


def observation_window(career: AuthorCareer, matched_dropout_length: int | None = None) -> tuple[int, int]:
    """Inclusive year span over which an author's features are measured.

    Comeback: first year through the year before return.  Dropout: a span of
    ``matched_dropout_length`` years ending at the last active year, clipped
    at the first year (the whole career if no length is given).  Active:
    first year through the dataset end.
    """
    if career.label == COMEBACK:
        if career.return_year is None or career.return_year <= career.first_year:
            raise DataError(f"comeback {career.author_id} has no valid return year")
        return career.first_year, career.return_year - 1
    if career.label == DROPOUT:
        if matched_dropout_length is None:
            return career.first_year, career.last_year
        if matched_dropout_length <= 0:
            raise ParameterError("matched window length must be positive")
        start = max(career.first_year, career.last_year - matched_dropout_length + 1)
        return start, career.last_year
    return career.first_year, career.dataset_end_year


def mean_comeback_window_length(careers: Mapping[str, AuthorCareer] | Sequence[AuthorCareer]) -> int | None:
    """Mean comeback window length rounded half-up; None without comebacks."""
    items = careers.values() if isinstance(careers, Mapping) else careers
    lengths = [c.return_year - c.first_year for c in items if c.label == COMEBACK]
    if not lengths:
        return None
    return int(math.floor(sum(lengths) / len(lengths) + 0.5))


def label_authors(
    author_index: Mapping[str, AuthorTimeline],
    dataset_end_year: int,
    gap_threshold: int = DEFAULT_GAP,
    matched_dropout_length: int | None = None,
) -> dict[str, AuthorCareer]:
    """Label every indexed author and attach observation windows.

    Dropout windows use ``matched_dropout_length`` when given, else the mean
    comeback window length of this run.
    """
    careers = {
        a: label_career(a, entry.years, dataset_end_year, gap_threshold)
        for a, entry in sorted(author_index.items())
    }
    if matched_dropout_length is None:
        matched_dropout_length = mean_comeback_window_length(careers)
    return {
        a: replace(c, window=observation_window(c, matched_dropout_length))
        for a, c in careers.items()
    }


def cohort_summary(careers: Mapping[str, AuthorCareer]) -> dict:
    """Counts per label plus the mean maximal gap of comeback authors."""
    counts = {lab: 0 for lab in LABELS}
    gaps = []
    for c in careers.values():
        counts[c.label] += 1
        if c.label == COMEBACK:
            gaps.append(c.max_gap)
    return {
        "counts": counts,
        "mean_comeback_max_gap": sum(gaps) / len(gaps) if gaps else None,
    }
