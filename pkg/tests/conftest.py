import json
from pathlib import Path

import pytest

from figsearch.construction import (
    Figure,
    FreePoint,
    IntersectLines,
    Midpoint,
    Segment,
)
from figsearch.corpus import bundled_corpus_path, load_corpus, load_store

DATA = Path(__file__).parent / "data"

SAMPLE_QUERY = (
    "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; "
    "draw A-C, A-F, A-B, B-C, B-D, C-E."
)
MEDIANS_QUERY = (
    "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; "
    "A-F intersects B-D at G ; draw A-C, A-F, A-B, B-C, B-D, C-E."
)


def medians_figure(concurrent: bool = False) -> Figure:
    """Triangle ABC with its three medians; G is on B-D and C-E (and A-F if concurrent)."""
    steps = [
        FreePoint("A"), FreePoint("B"), FreePoint("C"),
        Midpoint("D", "A-C"), Midpoint("E", "A-B"), Midpoint("F", "B-C"),
        Segment("B-D"), Segment("C-E"), IntersectLines("G", "B-D", "C-E"),
        Segment("A-F"),
    ]
    if concurrent:
        steps.append(IntersectLines("G", "A-F", "B-D"))
    return Figure("013", "Medians of a triangle", tuple(steps), ("A-B", "A-C", "B-C", "A-F", "B-D", "C-E"))


@pytest.fixture(scope="session")
def corpus_path():
    return bundled_corpus_path()


@pytest.fixture(scope="session")
def corpus(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture(scope="session")
def store(corpus_path):
    return load_store(corpus_path)


@pytest.fixture(scope="session")
def evaluation():
    lines = (DATA / "evaluation.jsonl").read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


# Acceptance reporting: one line per criterion at the end of the run.

_CRITERIA: dict[int, tuple[str, str, list[str]]] = {}
_NOTES: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.fixture
def report(request):
    """Lines appended here are printed under the criterion's summary line."""
    return _NOTES.setdefault(request.node.nodeid, [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    if rep.failed or rep.when == "call":
        verdict = "PASS" if rep.passed else "FAIL"
        _CRITERIA[number] = (verdict, title, _NOTES.get(item.nodeid, []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        verdict, title, notes = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")
        for note in notes:
            terminalreporter.write_line(f"              {note}")
