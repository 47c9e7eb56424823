"""Bibliographic record parsing, normalization and indexing.

Two input grammars are understood:

* ``jsonl``: one JSON object per line with keys ``id, title, authors, year,
  venue, references``.  This is also the canonical output format.
* ``aminer``: the tagged plain-text dump (``#*`` title, ``#@`` authors,
  ``#t`` year, ``#c`` venue, ``#index`` id, ``#%`` one reference per line).

Parsing never aborts on a bad record; it counts it and moves on.
"""
from __future__ import annotations

import io
import json
import logging
import re
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataError, ParameterError

log = logging.getLogger(__name__)

DEFAULT_SPAN = (1980, 2014)
FORMATS = ("jsonl", "aminer")

_REF_SPLIT = re.compile(r"[,;\s]+")


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    title: str
    author_ids: tuple[str, ...]
    year: int
    venue: str = ""
    references: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "id": self.paper_id,
            "title": self.title,
            "authors": list(self.author_ids),
            "year": self.year,
            "venue": self.venue,
            "references": list(self.references),
        }


@dataclass(frozen=True)
class AuthorRecord:
    author_id: str
    name: str
    affiliation: str | None
    paper_ids: tuple[str, ...]


@dataclass(frozen=True)
class AuthorshipTuple:
    author_id: str
    paper_id: str
    year: int


@dataclass(frozen=True)
class AuthorTimeline:
    """Per-author entry of the author index."""

    years: tuple[int, ...]
    paper_ids: tuple[str, ...]
    paper_years: tuple[int, ...]


@dataclass
class ParseStats:
    read: int = 0
    kept: int = 0
    malformed: int = 0
    missing_fields: int = 0
    out_of_span: int = 0
    duplicate_id: int = 0

    @property
    def dropped(self) -> int:
        return self.missing_fields + self.out_of_span + self.duplicate_id

    def to_json(self) -> dict:
        return {
            "read": self.read,
            "kept": self.kept,
            "dropped": self.dropped,
            "malformed": self.malformed,
            "missing_fields": self.missing_fields,
            "out_of_span": self.out_of_span,
            "duplicate_id": self.duplicate_id,
        }


def normalize_references(raw) -> list[str]:
    """Split a raw reference field into unique paper keys.

    Commas, semicolons and whitespace runs all act as delimiters; the first
    occurrence of a key wins.
    """
    if raw is None:
        return []
    if isinstance(raw, (list, tuple)):
        tokens: list[str] = []
        for item in raw:
            tokens.extend(normalize_references(str(item)))
    else:
        tokens = _REF_SPLIT.split(str(raw))
    seen: dict[str, None] = {}
    for tok in tokens:
        tok = tok.strip()
        if tok and tok not in seen:
            seen[tok] = None
    return list(seen)


def _normalize_authors(raw) -> tuple[str, ...]:
    if raw is None:
        return ()
    if isinstance(raw, str):
        sep = ";" if ";" in raw else ","
        items = raw.split(sep)
    else:
        items = [str(a) for a in raw]
    seen: dict[str, None] = {}
    for a in items:
        a = a.strip()
        if a and a not in seen:
            seen[a] = None
    return tuple(seen)


def _coerce_year(value) -> int | None:
    if value is None or isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    try:
        text = str(value).strip()
        return int(float(text)) if text else None
    except ValueError:
        return None


def _make_record(pid, title, authors, year, venue, refs) -> PaperRecord:
    pid = str(pid).strip()
    references = [r for r in normalize_references(refs) if r != pid]
    return PaperRecord(
        paper_id=pid,
        title="" if title is None else str(title),
        author_ids=_normalize_authors(authors),
        year=year,
        venue="" if venue is None else str(venue),
        references=tuple(references),
    )


def _iter_jsonl(lines: Iterable[str], stats: ParseStats) -> Iterator[dict]:
    for line in lines:
        if not line.strip():
            continue
        stats.read += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            stats.malformed += 1
            continue
        if not isinstance(obj, dict):
            stats.malformed += 1
            continue
        yield obj


def _iter_aminer(lines: Iterable[str], stats: ParseStats) -> Iterator[dict]:
    current: dict | None = None

    def flush():
        if current is not None:
            stats.read += 1
            return current
        return None

    for line in lines:
        line = line.rstrip("\r\n")
        if not line.strip():
            rec = flush()
            current = None
            if rec is not None:
                yield rec
            continue
        if not line.startswith("#"):
            stats.malformed += 1
            continue
        if line.startswith("#*"):
            # a new title always opens a new record, blank separator or not
            rec = flush()
            if rec is not None:
                yield rec
            current = {"title": line[2:].strip(), "references": []}
            continue
        if current is None:
            current = {"references": []}
        if line.startswith("#index"):
            current["id"] = line[len("#index"):].strip()
        elif line.startswith("#@"):
            current["authors"] = line[2:].strip()
        elif line.startswith("#t"):
            current["year"] = line[2:].strip()
        elif line.startswith("#c"):
            current["venue"] = line[2:].strip()
        elif line.startswith("#%"):
            current["references"].append(line[2:].strip())
        # other tags (#!, #i...) are ignored
    rec = flush()
    if rec is not None:
        yield rec


def parse_papers(
    stream: Iterable[str],
    format: str = "jsonl",
    span: tuple[int, int] | None = DEFAULT_SPAN,
) -> tuple[list[PaperRecord], ParseStats]:
    """Parse line-delimited records into a table of :class:`PaperRecord`.

    Records without an id or a usable year are dropped, as are records whose
    year lies outside ``span`` (pass ``None`` to disable the filter) and
    repeated ids (first wins).  Returned records are sorted by id.
    """
    if format not in FORMATS:
        raise ParameterError(f"unknown format {format!r}; expected one of {FORMATS}")
    stats = ParseStats()
    it = _iter_jsonl if format == "jsonl" else _iter_aminer
    out: dict[str, PaperRecord] = {}
    try:
        for obj in it(stream, stats):
            pid = obj.get("id")
            year = _coerce_year(obj.get("year"))
            if pid is None or str(pid).strip() == "" or year is None:
                stats.missing_fields += 1
                continue
            if span is not None and not (span[0] <= year <= span[1]):
                stats.out_of_span += 1
                continue
            rec = _make_record(
                pid, obj.get("title"), obj.get("authors"), year,
                obj.get("venue"), obj.get("references"),
            )
            if rec.paper_id in out:
                stats.duplicate_id += 1
                continue
            out[rec.paper_id] = rec
    except UnicodeDecodeError as exc:
        raise DataError(f"input is not valid UTF-8: {exc}") from exc
    stats.kept = len(out)
    if stats.malformed:
        log.warning("skipped %d malformed records", stats.malformed)
    return [out[k] for k in sorted(out)], stats


def read_papers(path: str | Path, format: str = "jsonl", span=DEFAULT_SPAN):
    """Open ``path`` (``-`` for stdin) and parse it."""
    try:
        if str(path) == "-":
            stream = io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8")
            return parse_papers(stream, format, span)
        with open(path, encoding="utf-8") as fh:
            return parse_papers(fh, format, span)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def dumps_papers(papers: Iterable[PaperRecord]) -> str:
    lines = [
        json.dumps(p.to_json(), ensure_ascii=False, separators=(",", ":"))
        for p in sorted(papers, key=lambda p: p.paper_id)
    ]
    return "".join(line + "\n" for line in lines)


def write_papers(papers: Iterable[PaperRecord], fh: IO[str]) -> None:
    fh.write(dumps_papers(papers))


def explode_authorship(papers: Iterable[PaperRecord]) -> list[AuthorshipTuple]:
    """One ``(author, paper, year)`` tuple per distinct authorship."""
    out = []
    for p in papers:
        for a in dict.fromkeys(p.author_ids):
            out.append(AuthorshipTuple(a, p.paper_id, p.year))
    return out


def build_author_index(tuples: Iterable[AuthorshipTuple]) -> dict[str, AuthorTimeline]:
    """Group authorship tuples by author.

    ``years`` is the sorted set of distinct publication years (used for gaps);
    ``paper_ids`` lists every paper, ordered by (year, id), so that a year
    with two papers counts twice toward publication volume.
    """
    grouped: dict[str, dict[str, int]] = defaultdict(dict)
    for t in tuples:
        grouped[t.author_id][t.paper_id] = t.year
    index = {}
    for a in sorted(grouped):
        pairs = sorted(grouped[a].items(), key=lambda kv: (kv[1], kv[0]))
        index[a] = AuthorTimeline(
            years=tuple(sorted({y for _, y in pairs})),
            paper_ids=tuple(pid for pid, _ in pairs),
            paper_years=tuple(y for _, y in pairs),
        )
    return index


@dataclass
class Corpus:
    """Immutable-by-convention view over a parsed paper table."""

    papers: dict[str, PaperRecord]
    author_index: dict[str, AuthorTimeline] = field(init=False)

    def __post_init__(self):
        self.papers = {k: self.papers[k] for k in sorted(self.papers)}
        self.author_index = build_author_index(explode_authorship(self.papers.values()))

    @classmethod
    def from_records(cls, records: Iterable[PaperRecord]) -> "Corpus":
        table: dict[str, PaperRecord] = {}
        for r in records:
            if r.paper_id in table:
                raise DataError(f"duplicate paper id {r.paper_id!r}")
            table[r.paper_id] = r
        return cls(table)

    @classmethod
    def read(cls, path, format="jsonl", span=DEFAULT_SPAN) -> "Corpus":
        records, _ = read_papers(path, format, span)
        return cls.from_records(records)

    def __len__(self) -> int:
        return len(self.papers)

    @property
    def span(self) -> tuple[int, int]:
        if not self.papers:
            raise DataError("empty corpus")
        years = [p.year for p in self.papers.values()]
        return min(years), max(years)

    def authors(self) -> dict[str, AuthorRecord]:
        return {
            a: AuthorRecord(a, a, None, entry.paper_ids)
            for a, entry in self.author_index.items()
        }

    def self_citation_flags(self, paper_id: str) -> tuple[bool, ...]:
        """Per reference: does the cited paper share an author with the citer?

        References to papers outside the corpus are never self-citations.
        """
        p = self.papers[paper_id]
        mine = set(p.author_ids)
        flags = []
        for q in p.references:
            other = self.papers.get(q)
            flags.append(other is not None and not mine.isdisjoint(other.author_ids))
        return tuple(flags)

    def without_authorships(self, drop: Iterable[tuple[str, str]]) -> "Corpus":
        """Copy with some (author, paper) authorships removed; papers stay."""
        drop = set(drop)
        table = {}
        for pid, p in self.papers.items():
            keep = tuple(a for a in p.author_ids if (a, pid) not in drop)
            table[pid] = p if keep == p.author_ids else PaperRecord(
                p.paper_id, p.title, keep, p.year, p.venue, p.references
            )
        return Corpus(table)
