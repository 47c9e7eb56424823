from dataclasses import dataclass

import pytest

from comeback.cohort import label_authors
from comeback.community import louvain_partition
from comeback.corpus import Corpus, PaperRecord
from comeback.graph import GraphOptions, build_citation_graph
from comeback.metrics import compute_features
from comeback.synth import SynthConfig, generate_corpus


def paper(pid, year, authors=("a",), refs=(), venue="", title=""):
    return PaperRecord(pid, title, tuple(authors), year, venue, tuple(refs))


@dataclass
class Analysis:
    corpus: Corpus
    truth: object
    graph: object
    partition: object
    careers: dict
    rows: list


def analyse(corpus, truth=None, year=2014, gamma=1.0, seed=0, options=None, threads=1):
    graph = build_citation_graph(corpus, year, options or GraphOptions())
    part = louvain_partition(graph, gamma, seed)
    careers = label_authors(corpus.author_index, year)
    rows = compute_features(careers, corpus.author_index, graph, part, threads=threads)
    return Analysis(corpus, truth, graph, part, careers, rows)


@pytest.fixture(scope="session")
def planted_corpus():
    records, truth = generate_corpus(SynthConfig(n_authors=2000, seed=0))
    return Corpus.from_records(records), truth


@pytest.fixture(scope="session")
def planted(planted_corpus):
    corpus, truth = planted_corpus
    return analyse(corpus, truth)


@pytest.fixture(scope="session")
def small_corpus():
    records, truth = generate_corpus(SynthConfig(n_authors=200, seed=7))
    return Corpus.from_records(records), truth


# one line per acceptance criterion, echoed after the run
ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
