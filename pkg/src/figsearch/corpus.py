"""Corpus files and the compiled figure store.

A corpus file is UTF-8 JSON Lines: one figure object per line,

    {"id": "013", "title": "...", "steps": [{"op": "free_point", "name": "A"}, ...],
     "draw": ["A-B", ...]}

Blank lines are ignored.  Each step record carries an ``op`` tag plus the
fields of the matching step class (see ``construction.STEP_TYPES``).  The
bundled ``data/minicorpus.jsonl`` is the normative example.
"""

from __future__ import annotations

import hashlib
import json
import pickle
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .construction import Figure, compile_figure, step_from_record
from .inference import CONSTRAINED_ONLY, MODES, infer
from .lattice import DependencyLattice, build_lattice
from .ontology import Census, Concept, OntoGraph, kind_census


class CorpusError(Exception):
    pass


class FormatError(CorpusError):
    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class DuplicateId(CorpusError):
    pass


class FigureError(CorpusError):
    """Compilation or inference failed for one figure."""

    def __init__(self, figure_id: str, cause: Exception):
        self.figure_id = figure_id
        self.cause = cause
        super().__init__(f"figure {figure_id}: {cause}")


def bundled_corpus_path() -> Path:
    return Path(str(resources.files("figsearch") / "data" / "minicorpus.jsonl"))


def figure_from_record(record: Mapping) -> Figure:
    if not isinstance(record, Mapping):
        raise ValueError("figure record must be an object")
    unknown = set(record) - {"id", "title", "steps", "draw"}
    if unknown:
        raise ValueError(f"unknown fields {sorted(unknown)}")
    fid = record.get("id")
    if not isinstance(fid, str) or not fid:
        raise ValueError("missing figure id")
    steps = record.get("steps", [])
    draw = record.get("draw", [])
    if not isinstance(steps, list) or not isinstance(draw, list):
        raise ValueError("steps and draw must be lists")
    if not all(isinstance(d, str) for d in draw):
        raise ValueError("draw entries must be strings")
    parsed = []
    for i, s in enumerate(steps):
        try:
            parsed.append(step_from_record(s))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"step {i}: bad record {s!r} ({exc})") from None
    return Figure(fid, str(record.get("title", "")), tuple(parsed), tuple(draw))


def figure_to_record(figure: Figure) -> dict:
    return {
        "id": figure.id,
        "title": figure.title,
        "steps": [s.to_record() for s in figure.steps],
        "draw": list(figure.draw),
    }


def parse_corpus(text: str, source: str = "<corpus>") -> list[Figure]:
    figures: list[Figure] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        location = f"{source}:{lineno}"
        try:
            figure = figure_from_record(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(location, f"invalid JSON ({exc.msg})") from None
        except ValueError as exc:
            raise FormatError(location, str(exc)) from None
        if figure.id in seen:
            raise DuplicateId(f"{location}: duplicate figure id {figure.id!r}")
        seen.add(figure.id)
        figures.append(figure)
    return figures


def load_corpus(path) -> list[Figure]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(str(path), f"cannot read corpus ({exc})") from None
    return parse_corpus(text, str(path))


def serialize_corpus(figures: Iterable[Figure]) -> str:
    return "".join(json.dumps(figure_to_record(f), ensure_ascii=False) + "\n" for f in figures)


@dataclass(frozen=True)
class StoredFigure:
    figure: Figure
    graph: OntoGraph
    lattice: DependencyLattice
    census: Census


@dataclass(frozen=True)
class CompiledStore:
    mode: str = CONSTRAINED_ONLY
    figures: Mapping[str, StoredFigure] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.figures)

    def __iter__(self):
        return (self.figures[k] for k in sorted(self.figures))

    def __getitem__(self, figure_id: str) -> StoredFigure:
        return self.figures[figure_id]

    def totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for stored in self:
            for key, value in stored.census.as_dict().items():
                out[key] = out.get(key, 0) + value
        return out


def compile_one(figure: Figure, mode: str = CONSTRAINED_ONLY) -> StoredFigure:
    try:
        graph = infer(compile_figure(figure), mode)
        lattice = build_lattice(figure)
    except Exception as exc:
        raise FigureError(figure.id, exc) from exc
    return StoredFigure(figure, graph, lattice, kind_census(graph))


def ingest(figures: Iterable[Figure], mode: str = CONSTRAINED_ONLY) -> CompiledStore:
    """Compile, infer and index every figure."""
    if mode not in MODES:
        raise ValueError(f"unknown inference mode {mode!r}")
    stored = {}
    for figure in figures:
        if figure.id in stored:
            raise DuplicateId(f"duplicate figure id {figure.id!r}")
        stored[figure.id] = compile_one(figure, mode)
    return CompiledStore(mode, stored)


def graph_to_record(graph: OntoGraph) -> dict:
    nodes = []
    for n in sorted(graph.nodes):
        p = graph.nodes[n]
        item: dict = {"id": n, "provenance": graph.provenance.get(n)}
        if isinstance(p, Concept):
            item.update(kind=p.kind.value, label=p.label, ends=list(p.ends))
            if p.angle is not None:
                item["angle"] = str(p.angle)
        else:
            item.update(kind="ratio", value=f"{p.value.numerator}/{p.value.denominator}")
        nodes.append(item)
    edges = [
        {"src": e.src, "dst": e.dst, "kind": e.kind.value, "provenance": graph.provenance.get(e)}
        for e in graph.sorted_edges()
    ]
    return {"nodes": nodes, "edges": edges}


def serialize_store(store: CompiledStore) -> str:
    """Canonical JSON rendering of a store (stable across runs)."""
    payload = {
        "mode": store.mode,
        "figures": [
            {
                "figure": figure_to_record(s.figure),
                "graph": graph_to_record(s.graph),
                "lattice": sorted([a, b, l] for a, b, l in s.lattice.edges),
                "census": s.census.as_dict(),
            }
            for s in store
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def content_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_cache(store: CompiledStore, cache_path, corpus_path) -> None:
    key = (content_hash(corpus_path), store.mode)
    with open(cache_path, "wb") as fh:
        pickle.dump((key, store), fh)


def load_cache(cache_path, corpus_path, mode: str = CONSTRAINED_ONLY) -> CompiledStore | None:
    """Return the cached store if it was built from this exact corpus and mode."""
    try:
        with open(cache_path, "rb") as fh:
            key, store = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError, ValueError):
        return None
    if key != (content_hash(corpus_path), mode):
        return None
    return store


def load_store(corpus_path, mode: str = CONSTRAINED_ONLY, cache_path=None) -> CompiledStore:
    if cache_path is not None:
        cached = load_cache(cache_path, corpus_path, mode)
        if cached is not None:
            return cached
    store = ingest(load_corpus(corpus_path), mode)
    if cache_path is not None:
        save_cache(store, cache_path, corpus_path)
    return store

