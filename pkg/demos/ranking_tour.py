"""Small queries hit several figures; smaller figures rank first.

    python3 demos/ranking_tour.py
"""

from figsearch import answer_query, bundled_corpus_path, load_store

QUERIES = {
    "a triangle with one median": "M is the midpoint of B-C ; draw A-B, A-C, B-C, A-M.",
    "a right angle in a triangle": "angle B-A-C is right ; draw A-B, A-C, B-C.",
    "a perpendicular at an endpoint": "line L is perpendicular to segment A-B at point A.",
}


def main() -> None:
    store = load_store(bundled_corpus_path())
    for about, text in QUERIES.items():
        answer = answer_query(text, store, limit=1)
        print(f"{about}:  {text}")
        for rank, r in enumerate(answer.results, 1):
            print(f"  {rank}. {r.figure_id}  score {r.score}  size {r.figure_size}  {r.title}")
        print()


if __name__ == "__main__":
    main()
