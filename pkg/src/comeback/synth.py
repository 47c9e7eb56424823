"""Synthetic scholarly corpora with planted communities, cohorts and citation habits.

Every paper belongs to a planted community.  A paper's references are drawn
from strictly earlier years: from its own community with probability
``1 - rho`` and from a uniformly chosen other community with probability
``rho``, where ``rho`` belongs to the paper's author.  Citation age follows a
geometric lag, so most references are recent.

Three kinds of author are planted:

* staff: a few per community, publishing every year; they carry the
  background literature and are always Active.
* cohort authors labeled Comeback, Dropout or Active, whose first career
  phase (the part that ends up in the observation window) is drawn from the
  same size and timing distributions for every label.  Labels differ only in
  what happens after that phase and in the per-label knobs ``cross_cite_prob``,
  ``community_hop_prob`` and ``gap_pattern``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from .cohort import ACTIVE, COMEBACK, DROPOUT
from .corpus import PaperRecord, dumps_papers
from .errors import ParameterError

COHORTS = (COMEBACK, DROPOUT, ACTIVE)
STAFF = "staff"

# venue-type shares per cohort (renormalized on use); Active reuses the dropout mix
_VENUE_MIX = {
    COMEBACK: {"Other": 0.44, "Conference": 0.36, "Journal": 0.10, "Workshop": 0.05, "Symposium": 0.05},
    DROPOUT: {"Other": 0.42, "Conference": 0.31, "Journal": 0.18, "Workshop": 0.03, "Symposium": 0.05},
    ACTIVE: {"Other": 0.42, "Conference": 0.31, "Journal": 0.18, "Workshop": 0.03, "Symposium": 0.05},
    STAFF: {"Other": 0.2, "Conference": 0.4, "Journal": 0.3, "Workshop": 0.05, "Symposium": 0.05},
}


@dataclass
class SynthConfig:
    n_communities: int = 8
    papers_per_community_per_year: int = 10
    staff_per_community: int = 5
    span: tuple[int, int] = (1980, 2014)
    n_authors: int = 2000
    cohort_mix: dict[str, float] = field(default_factory=lambda: {COMEBACK: 0.25, DROPOUT: 0.5, ACTIVE: 0.25})
    cross_cite_prob: dict[str, float] = field(
        default_factory=lambda: {COMEBACK: 0.40, DROPOUT: 0.25, ACTIVE: 0.25, STAFF: 0.15})
    rho_concentration: float = 20.0
    community_hop_prob: dict[str, float] = field(
        default_factory=lambda: {COMEBACK: 0.35, DROPOUT: 0.10, ACTIVE: 0.10})
    # probability of each inter-publication gap length 1, 2, 3, ... in the first phase
    gap_pattern: dict[str, list[float]] = field(
        default_factory=lambda: {COMEBACK: [0.45, 0.40, 0.15], DROPOUT: [0.85, 0.15], ACTIVE: [0.85, 0.15]})
    comeback_gap: tuple[int, int] = (4, 8)
    active_years: tuple[int, int] = (3, 7)
    career_papers: tuple[int, int] = (4, 12)
    refs_per_paper: tuple[int, int] = (6, 12)
    mean_reference_lag: float = 3.0
    self_citation_prob: float = 0.3
    gap_threshold: int = 3
    seed: int = 0

    def __post_init__(self):
        self.span = tuple(self.span)
        self.comeback_gap = tuple(self.comeback_gap)
        self.active_years = tuple(self.active_years)
        self.career_papers = tuple(self.career_papers)
        self.refs_per_paper = tuple(self.refs_per_paper)
        self.validate()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def validate(self) -> None:
        lo, hi = self.span
        if lo > hi:
            raise ParameterError("span is empty")
        if self.n_communities < 2:
            raise ParameterError("need at least two communities")
        if self.staff_per_community < 1 or self.papers_per_community_per_year < self.staff_per_community:
            raise ParameterError("each staff author needs at least one paper per year")
        mix = self.cohort_mix
        if set(mix) - set(COHORTS) or any(not 0 <= v <= 1 for v in mix.values()):
            raise ParameterError("cohort_mix must map cohort labels to probabilities")
        if abs(sum(mix.values()) - 1.0) > 1e-9:
            raise ParameterError("cohort_mix proportions must sum to 1")
        for table in (self.cross_cite_prob, self.community_hop_prob):
            if any(not 0 <= v <= 1 for v in table.values()):
                raise ParameterError("probabilities must lie in [0, 1]")
        if not 0 <= self.self_citation_prob <= 1:
            raise ParameterError("self_citation_prob must lie in [0, 1]")
        for lab, pattern in self.gap_pattern.items():
            if any(p < 0 for p in pattern) or abs(sum(pattern) - 1) > 1e-9:
                raise ParameterError(f"gap_pattern[{lab}] must be a probability vector")
        if self.comeback_gap[0] < self.gap_threshold:
            raise ParameterError("planted comeback gap must reach the gap threshold")
        if len(self.gap_pattern.get(COMEBACK, [1])) >= self.comeback_gap[0]:
            raise ParameterError("comeback first-phase gaps must stay below the planted gap")
        for lab in (DROPOUT, ACTIVE):
            if len(self.gap_pattern.get(lab, [1])) >= self.gap_threshold:
                raise ParameterError(f"{lab} gaps must stay below the gap threshold")
        if self.active_years[0] < 2 or self.active_years[0] > self.active_years[1]:
            raise ParameterError("active_years must be an increasing range starting at >= 2")
        if self.career_papers[1] < self.active_years[1]:
            raise ParameterError("career_papers upper bound must cover active_years")
        if self.refs_per_paper[0] < 0 or self.refs_per_paper[0] > self.refs_per_paper[1]:
            raise ParameterError("refs_per_paper must be an increasing non-negative range")
        if self.refs_per_paper[1] > self.papers_per_community_per_year * self.n_communities:
            raise ParameterError("refs_per_paper exceeds the papers available in earlier years")
        if self.mean_reference_lag < 1:
            raise ParameterError("mean_reference_lag must be >= 1")


@dataclass
class GroundTruth:
    config: dict
    authors: dict[str, dict]
    papers: dict[str, int]

    def to_json(self) -> str:
        return json.dumps(
            {"config": self.config, "authors": self.authors, "papers": self.papers},
            sort_keys=True, indent=1,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        d = json.loads(text)
        return cls(d["config"], d["authors"], d["papers"])

    def labels(self, role: str | None = "cohort") -> dict[str, str]:
        return {a: v["label"] for a, v in self.authors.items() if role is None or v["role"] == role}


@dataclass
class _Paper:
    author: str
    year: int
    community: int
    venue_kind: str
    rho: float
    refs: list[int] = field(default_factory=list)


def _draw_int(rng, bounds) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def _draw_gaps(rng, pattern, n) -> list[int]:
    return [int(g) + 1 for g in rng.choice(len(pattern), size=n, p=pattern)]


def _venue_text(kind: str, community: int, rng) -> str:
    topic = f"Topic {community}"
    if kind == "Journal":
        return f"Journal of {topic}"
    if kind == "Conference":
        return f"Proceedings of the International Conference on {topic}"
    if kind == "Workshop":
        return f"Workshop on {topic}"
    if kind == "Symposium":
        return f"Symposium on {topic}"
    return ("arXiv preprint", "Technical Report", "")[int(rng.integers(3))]


def generate_corpus(config: SynthConfig) -> tuple[list[PaperRecord], GroundTruth]:
    """Build a corpus and its ground truth; identical output for identical config."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    start, end = config.span
    K = config.n_communities
    papers: list[_Paper] = []
    truth_authors: dict[str, dict] = {}

    def kind_for(label):
        mix = _VENUE_MIX[label]
        keys = list(mix)
        w = np.array([mix[k] for k in keys])
        return keys[int(rng.choice(len(keys), p=w / w.sum()))]

    # background literature
    rho_staff = config.cross_cite_prob.get(STAFF, 0.0)
    for c in range(K):
        for s in range(config.staff_per_community):
            aid = f"S{c:02d}{s:03d}"
            truth_authors[aid] = {
                "label": ACTIVE, "role": STAFF, "home_community": c, "rho": rho_staff,
                "hop_prob": 0.0, "first_year": start, "return_year": None, "gap": None,
                "n_papers": 0,
            }
    for y in range(start, end + 1):
        for c in range(K):
            for j in range(config.papers_per_community_per_year):
                aid = f"S{c:02d}{j % config.staff_per_community:03d}"
                truth_authors[aid]["n_papers"] += 1
                papers.append(_Paper(aid, y, c, kind_for(STAFF), rho_staff))

    # cohort authors
    n = config.n_authors
    counts = {lab: int(round(config.cohort_mix.get(lab, 0.0) * n)) for lab in COHORTS}
    counts[DROPOUT] += n - sum(counts.values())
    labels = [lab for lab in COHORTS for _ in range(counts[lab])]
    labels = [labels[i] for i in rng.permutation(len(labels))]
    width = max(5, len(str(n)))
    for idx, label in enumerate(labels):
        aid = f"A{idx:0{width}d}"
        home = int(rng.integers(K))
        mean_rho = config.cross_cite_prob.get(label, 0.0)
        kappa = config.rho_concentration
        if kappa > 0 and 0 < mean_rho < 1:
            rho = float(rng.beta(mean_rho * kappa, (1 - mean_rho) * kappa))
        else:
            rho = mean_rho
        hop = config.community_hop_prob.get(label, 0.0)
        n_years = _draw_int(rng, config.active_years)
        n_pre = max(n_years, _draw_int(rng, config.career_papers))
        gaps = _draw_gaps(rng, config.gap_pattern.get(label, [1.0]), n_years - 1)
        offsets = np.concatenate([[0], np.cumsum(gaps)]).astype(int)
        pre_span = int(offsets[-1]) + 1
        # the same planted gap is drawn for every label so first-phase timing matches
        big_gap = _draw_int(rng, config.comeback_gap)
        latest_first = end - (pre_span - 1) - big_gap
        if latest_first < start + 1:
            raise ParameterError("span too short for the requested career lengths")
        first = int(rng.integers(start + 1, latest_first + 1))
        pre_years = [first + int(o) for o in offsets]
        # every active year gets a paper, the rest land on random active years
        per_year = np.ones(n_years, dtype=int)
        extra = rng.integers(0, n_years, size=n_pre - n_years)
        np.add.at(per_year, extra, 1)
        years = [y for y, k in zip(pre_years, per_year) for _ in range(k)]
        ret = gap = None
        if label in (COMEBACK, ACTIVE):
            y = pre_years[-1] + big_gap if label == COMEBACK else pre_years[-1] + _draw_gaps(rng, [0.7, 0.3], 1)[0]
            if label == COMEBACK:
                ret, gap = y, big_gap
            while y <= end:
                years.append(y)
                y += _draw_gaps(rng, [0.7, 0.3], 1)[0]
            if label == ACTIVE and years[-1] < end - config.gap_threshold + 1:
                years.append(end)
        for y in years:
            comm = home if rng.random() >= hop else int((home + 1 + rng.integers(K - 1)) % K)
            papers.append(_Paper(aid, y, comm, kind_for(label), rho))
        truth_authors[aid] = {
            "label": label, "role": "cohort", "home_community": home, "rho": rho,
            "hop_prob": hop, "first_year": first, "return_year": ret, "gap": gap,
            "n_papers": len(years),
        }

    # ids follow publication order
    order = sorted(range(len(papers)), key=lambda i: (papers[i].year, i))
    papers = [papers[i] for i in order]
    width = max(6, len(str(len(papers))))
    ids = [f"P{i:0{width}d}" for i in range(len(papers))]

    pools: dict[tuple[int, int], list[int]] = {}
    own_earlier: dict[str, list[int]] = {}
    this_year: list[int] = []
    p_lag = 1.0 / config.mean_reference_lag
    for i, p in enumerate(papers):
        if p.year > start:
            n_refs = _draw_int(rng, config.refs_per_paper)
            chosen: dict[int, None] = {}
            mine = own_earlier.get(p.author, [])
            is_staff = p.author.startswith("S")
            if mine and not is_staff and n_refs > 0 and rng.random() < config.self_citation_prob:
                chosen[mine[int(rng.integers(len(mine)))]] = None
            attempts = 0
            while len(chosen) < n_refs and attempts < 50 * max(n_refs, 1):
                attempts += 1
                if rng.random() < p.rho:
                    c = int((p.community + 1 + rng.integers(K - 1)) % K)
                else:
                    c = p.community
                lag = int(rng.geometric(p_lag))
                if p.year - lag < start:
                    lag = int(rng.integers(1, p.year - start + 1))
                pool = pools.get((c, p.year - lag))
                if pool:
                    chosen[pool[int(rng.integers(len(pool)))]] = None
            p.refs = list(chosen)
        pools.setdefault((p.community, p.year), []).append(i)
        this_year.append(i)
        if i + 1 == len(papers) or papers[i + 1].year != p.year:
            # release the finished year for self-citation by later papers
            for j in this_year:
                own_earlier.setdefault(papers[j].author, []).append(j)
            this_year = []
    records = _finalize(papers, ids, rng)
    truth = GroundTruth(
        config=config.to_dict(),
        authors=dict(sorted(truth_authors.items())),
        papers={ids[i]: p.community for i, p in enumerate(papers)},
    )
    return records, truth


def _finalize(papers, ids, rng) -> list[PaperRecord]:
    return [
        PaperRecord(
            paper_id=ids[i],
            title=f"Synthetic paper {ids[i]}",
            author_ids=(p.author,),
            year=p.year,
            venue=_venue_text(p.venue_kind, p.community, rng),
            references=tuple(ids[j] for j in p.refs),
        )
        for i, p in enumerate(papers)
    ]


def corpus_jsonl(config: SynthConfig) -> tuple[str, str]:
    """Serialized corpus and ground truth, ready to write to disk."""
    records, truth = generate_corpus(config)
    return dumps_papers(records), truth.to_json()
