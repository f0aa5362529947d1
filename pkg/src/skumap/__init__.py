"""SKU mapping engine.

Decides whether two product listing titles denote the same stock keeping
unit, via a deterministic rule baseline, LLM-backed question-driven
matching with web evidence, reuse of stored reasoning traces, and a human
review loop feeding corrections back into the knowledge base.
"""

from .core import (
    DimensionStatus,
    DisambiguationQuestion,
    EvidenceAnswer,
    EvidenceSet,
    MappingResult,
    MatchDimension,
    MatchVerdict,
    ProductPair,
    Provenance,
    QuestionSet,
    ResolvedBy,
    VerdictLabel,
    new_pair,
    validate_verdict,
)
from .pipeline import MappingMode, MatchingEngine, ReviewQueue
from .tracestore import TraceStore, concat_questions, cosine

__all__ = [
    "DimensionStatus",
    "DisambiguationQuestion",
    "EvidenceAnswer",
    "EvidenceSet",
    "MappingResult",
    "MatchDimension",
    "MatchVerdict",
    "ProductPair",
    "Provenance",
    "QuestionSet",
    "ResolvedBy",
    "VerdictLabel",
    "new_pair",
    "validate_verdict",
    "MappingMode",
    "MatchingEngine",
    "ReviewQueue",
    "TraceStore",
    "concat_questions",
    "cosine",
]

__version__ = "0.1.0"
