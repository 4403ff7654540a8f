"""Command-line front end.

Exit codes: 0 matches found, 1 no match, 2 query error, 3 corpus error,
4 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .construction import ValidationFailed
from .corpus import CorpusError, figure_from_record, ingest, load_corpus, load_store, save_cache
from .cql import CQLError
from .engine import Answer, answer_query
from .inference import CONSTRAINED_ONLY, FULL
from .lattice import CycleDetected, RemoveNode, RemoveRelation
from .ontology import Edge, graph_to_dot

EXIT_MATCH, EXIT_NO_MATCH, EXIT_QUERY, EXIT_CORPUS, EXIT_INTERNAL = range(5)

_ANGLE_MODES = {"constrained": CONSTRAINED_ONLY, "full": FULL}


class QueryInputError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figsearch", description="Search geometric figures by content.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="compile a corpus and report or cache it")
    p.add_argument("--corpus", required=True)
    p.add_argument("--cache")
    p.add_argument("--angles", choices=sorted(_ANGLE_MODES), default="constrained")

    p = sub.add_parser("query", help="search a corpus")
    p.add_argument("--corpus", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--cql")
    src.add_argument("--cql-file")
    src.add_argument("--figure", help="JSON file holding one figure record")
    p.add_argument("--max-reductions", type=int, default=32)
    p.add_argument("--limit", type=int, default=10)
    p.add_argument("--loose-linear", action="store_true")
    p.add_argument("--explain", action="store_true")
    p.add_argument("--format", choices=("text", "json", "dot"), default="text")

    p = sub.add_parser("stats", help="figure count and census totals")
    p.add_argument("--corpus", required=True)

    p = sub.add_parser("dot", help="Graphviz export of a stored figure")
    p.add_argument("--corpus", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--lattice", action="store_true")
    p.add_argument("--cql", help="emphasize the nodes this query matches")
    return parser


def _fraction(value) -> str:
    return f"{value.numerator}/{value.denominator}"


def _element(element) -> str:
    if isinstance(element, Edge):
        return f"{element.src} -{element.kind.value}-> {element.dst}"
    return str(element)


def _action_record(action) -> dict:
    if isinstance(action, RemoveRelation):
        return {"action": "remove_relation", "element": _element(action.element), "bottom": action.owner, "op": action.op}
    return {"action": "remove_node", "element": action.name, "bottom": action.name, "op": action.op}


def _explain_line(i: int, action) -> str:
    if isinstance(action, RemoveNode):
        return f"  {i}. remove node {action.name} (bottom node {action.name}, op {action.op})"
    return f"  {i}. remove relation {_element(action.element)} (bottom node {action.owner}, op {action.op})"


def _answer_json(answer: Answer) -> str:
    payload = {
        "status": answer.status.value,
        "reductions": [_action_record(a) for a in answer.log],
        "results": [
            {
                "id": r.figure_id,
                "title": r.title,
                "score": _fraction(r.score),
                "figure_size": r.figure_size,
                "embeddings": [dict(e) for e in r.labelled_embeddings],
            }
            for r in answer.results
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def _answer_text(answer: Answer, explain: bool) -> str:
    lines = [f"{answer.status.value}: {len(answer.results)} figure(s), {len(answer.log)} reduction(s)"]
    if explain and answer.log:
        lines.append("reductions:")
        lines.extend(_explain_line(i, a) for i, a in enumerate(answer.log, 1))
    for rank, r in enumerate(answer.results, 1):
        lines.append(f"{rank}. score {_fraction(r.score)}  {r.figure_id}  {r.title}".rstrip())
        for e in r.labelled_embeddings:
            lines.append("   " + ", ".join(f"{q}↦{f}" for q, f in e.items()))
    return "\n".join(lines)


def _read_query(args):
    if args.cql is not None:
        return args.cql
    if args.cql_file is not None:
        try:
            return Path(args.cql_file).read_text(encoding="utf-8")
        except OSError as exc:
            raise QueryInputError(f"cannot read {args.cql_file}: {exc}") from None
    try:
        return figure_from_record(json.loads(Path(args.figure).read_text(encoding="utf-8")))
    except (OSError, ValueError) as exc:
        raise QueryInputError(f"bad figure file {args.figure}: {exc}") from None


def _cmd_query(args, out) -> int:
    store = load_store(args.corpus)
    source = _read_query(args)
    answer = answer_query(
        source, store, max_reductions=args.max_reductions, limit=args.limit, loose_linear=args.loose_linear
    )
    if args.format == "json":
        print(_answer_json(answer), file=out)
    elif args.format == "dot":
        if answer.results:
            best = answer.results[0]
            stored = store[best.figure_id]
            print(graph_to_dot(stored.graph, best.embeddings[0].values(), best.figure_id), file=out)
        if args.explain:
            for i, a in enumerate(answer.log, 1):
                print("//" + _explain_line(i, a), file=out)
    else:
        print(_answer_text(answer, args.explain), file=out)
    return EXIT_MATCH if answer.matched else EXIT_NO_MATCH


_CONCEPT_KEYS = {"point", "segment", "line", "circle", "angle"}
_ROLE_KEYS = {"nominator", "denominator"}


def _cmd_ingest(args, out) -> int:
    mode = _ANGLE_MODES[args.angles]
    store = ingest(load_corpus(args.corpus), mode)
    if args.cache:
        save_cache(store, args.cache, args.corpus)
    totals = store.totals()
    print(f"ingested {len(store)} figure(s) ({mode} angles)", file=out)
    concepts = sum(v for k, v in totals.items() if k in _CONCEPT_KEYS)
    relations = sum(v for k, v in totals.items() if k not in _CONCEPT_KEYS | _ROLE_KEYS)
    print(f"concepts {concepts}, relations {relations}", file=out)
    return EXIT_MATCH


def _cmd_stats(args, out) -> int:
    figures = load_corpus(args.corpus)
    store = ingest(figures)
    totals = store.totals()
    concepts = {k: v for k, v in totals.items() if k in _CONCEPT_KEYS}
    # a reified ratio counts as one has_ratio relation; its role edges are listed apart
    roles = {k: totals[k] for k in _ROLE_KEYS}
    relations = {k: v for k, v in totals.items() if k not in _CONCEPT_KEYS | _ROLE_KEYS}
    relations["has_ratio"] = relations.pop("ratio")
    print(f"figures: {len(store)}", file=out)
    print(f"construction steps: {sum(len(f.steps) for f in figures)}", file=out)
    print(f"concept instances: {sum(concepts.values())}", file=out)
    for k, v in concepts.items():
        print(f"  {k}: {v}", file=out)
    print(f"relation instances: {sum(relations.values())}", file=out)
    for k, v in relations.items():
        print(f"  {k}: {v}", file=out)
    print("ratio role edges: " + ", ".join(f"{k} {v}" for k, v in roles.items()), file=out)
    return EXIT_MATCH


def _cmd_dot(args, out) -> int:
    store = load_store(args.corpus)
    try:
        stored = store[args.id]
    except KeyError:
        raise CorpusError(f"no figure with id {args.id!r}") from None
    highlight: set[str] = set()
    if args.cql:
        answer = answer_query(args.cql, store, limit=1)
        for r in answer.results:
            if r.figure_id == args.id:
                highlight = set(r.embeddings[0].values())
    if args.lattice:
        print(stored.lattice.to_dot(highlight), file=out)
    else:
        print(graph_to_dot(stored.graph, highlight, args.id), file=out)
    return EXIT_MATCH


_COMMANDS = {"ingest": _cmd_ingest, "query": _cmd_query, "stats": _cmd_stats, "dot": _cmd_dot}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, out)
    except CQLError as exc:
        start, end = exc.span
        print(f"query error at {start}..{end}: {exc.message}", file=err)
        return EXIT_QUERY
    except (ValidationFailed, CycleDetected, QueryInputError) as exc:
        print(f"query error: {exc}", file=err)
        return EXIT_QUERY
    except CorpusError as exc:
        print(f"corpus error: {exc}", file=err)
        return EXIT_CORPUS
    except Exception as exc:  # invariant violations and bugs
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())
