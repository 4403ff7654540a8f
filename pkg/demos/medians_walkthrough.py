"""Walk through one query: compile it, look at its graph, search, and relax.

    python3 demos/medians_walkthrough.py
"""

from figsearch import answer_query, bundled_corpus_path, compile_query, load_store
from figsearch.engine import compile_source
from figsearch.ontology import ConceptKind

SAMPLE = (
    "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; "
    "draw A-C, A-F, A-B, B-C, B-D, C-E."
)
# The same triangle, but now asking for all three medians to meet at G.
CONCURRENT = SAMPLE.replace("; draw", "; A-F intersects B-D at G ; draw")


def show_graph(text: str) -> None:
    figure = compile_query(text)
    print("construction steps:")
    for step in figure.steps:
        print("   ", step)
    graph = compile_source(figure).graph
    kinds = {k.value: len(graph.concepts(k)) for k in ConceptKind}
    print("query graph:", kinds, f"{len(graph.ratio_nodes())} ratios, {len(graph.edges)} edges")


def search(store, text: str) -> None:
    answer = answer_query(text, store)
    print(f"status {answer.status.value}, {len(answer.log)} reduction(s)")
    for action in answer.log:
        print("    relaxed:", action)
    for result in answer.results:
        print(f"    {result.figure_id} {result.title!r} score {result.score}")


def main() -> None:
    store = load_store(bundled_corpus_path())
    print(f"corpus: {len(store)} figures\n")

    print("== the sample query ==")
    show_graph(SAMPLE)
    search(store, SAMPLE)

    # No stored figure states that A-F passes through G, so the exact query
    # fails and the engine drops one relation of the last-built object.
    print("\n== concurrent medians ==")
    search(store, CONCURRENT)


if __name__ == "__main__":
    main()
