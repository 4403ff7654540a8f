"""Content-based search over geometric figures described by their constructions."""

from .construction import Figure, ValidationFailed, compile_figure, validate
from .corpus import CompiledStore, bundled_corpus_path, ingest, load_corpus, load_store
from .cql import ArityError, CQLError, LexError, ParseError, SemanticError, compile_query
from .engine import Answer, Status, answer_query, search_corpus
from .inference import CONSTRAINED_ONLY, FULL, infer
from .lattice import build_lattice, reduction_sequence
from .matcher import find_embeddings
from .ontology import OntoGraph
from .ranking import MatchResult, score

__all__ = [
    "Answer", "ArityError", "CONSTRAINED_ONLY", "CQLError", "CompiledStore", "FULL", "Figure",
    "LexError", "MatchResult", "OntoGraph", "ParseError", "SemanticError", "Status",
    "ValidationFailed", "answer_query", "build_lattice", "bundled_corpus_path", "compile_figure",
    "compile_query", "find_embeddings", "infer", "ingest", "load_corpus", "load_store",
    "reduction_sequence", "score", "search_corpus", "validate",
]
