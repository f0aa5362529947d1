"""Shared domain types: pairs, questions, evidence, verdicts, results.

All types here are immutable after construction and carry a canonical JSON
serialization (``to_dict`` / ``from_dict``) used by the trace DB, the review
queue, the HTTP service, and report files. Field names in the JSON form match
the attribute names exactly.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .errors import EmptyTitle


class MatchDimension(str, Enum):
    """The five attribute dimensions a disambiguation question can target."""

    BRAND = "Brand"
    CORE_PRODUCT_NAME = "CoreProductName"
    VARIANT = "Variant"
    SPECIFICATION = "Specification"
    QUANTITY = "Quantity"


class DimensionStatus(str, Enum):
    MATCH = "Match"
    MISMATCH = "Mismatch"
    UNKNOWN = "Unknown"


class VerdictLabel(str, Enum):
    EQUIVALENT = "Equivalent"
    NON_EQUIVALENT = "NonEquivalent"


class Provenance(str, Enum):
    RULE = "rule"
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"
    WEB_SEARCH = "web_search"
    Q2K_FRESH = "q2k_fresh"
    Q2K_REUSED = "q2k_reused"


class ResolvedBy(str, Enum):
    FRESH_SEARCH = "fresh_search"
    REUSED_TRACE = "reused_trace"


_pair_counter = itertools.count(1)
_pair_lock = threading.Lock()


@dataclass(frozen=True)
class ProductPair:
    """One (base, compared) listing-title comparison unit."""

    pair_id: str
    base_title: str
    compared_title: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "base_title": self.base_title,
            "compared_title": self.compared_title,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ProductPair":
        return cls(d["pair_id"], d["base_title"], d["compared_title"])


def new_pair(base: str, compared: str, pair_id: Optional[str] = None) -> ProductPair:
    """Build a ProductPair, storing both titles verbatim.

    Titles are kept exactly as given (no normalization); pair ids are
    engine-generated (monotonic counter) unless supplied by the caller.
    """
    if not base or not base.strip():
        raise EmptyTitle("base title is empty")
    if not compared or not compared.strip():
        raise EmptyTitle("compared title is empty")
    if pair_id is None:
        with _pair_lock:
            pair_id = f"pair-{next(_pair_counter):06d}"
    return ProductPair(pair_id=pair_id, base_title=base, compared_title=compared)


@dataclass(frozen=True)
class DisambiguationQuestion:
    """A single attribute-specific question about one pair."""

    question_id: str
    pair_id: str
    text: str
    dimension: MatchDimension

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("question text must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "pair_id": self.pair_id,
            "text": self.text,
            "dimension": self.dimension.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DisambiguationQuestion":
        return cls(d["question_id"], d["pair_id"], d["text"], MatchDimension(d["dimension"]))


@dataclass(frozen=True)
class EvidenceAnswer:
    """A concise, self-contained answer resolving one question."""

    question_id: str
    answer_text: str
    sources: tuple[tuple[str, str], ...]  # (url, snippet)
    resolved_by: ResolvedBy

    def __post_init__(self):
        if not self.answer_text.strip():
            raise ValueError("answer text must be non-empty")
        if self.resolved_by is ResolvedBy.FRESH_SEARCH and not self.sources:
            raise ValueError("fresh_search answers must carry at least one source")

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "answer_text": self.answer_text,
            "sources": [{"url": u, "snippet": s} for u, s in self.sources],
            "resolved_by": self.resolved_by.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvidenceAnswer":
        return cls(
            d["question_id"],
            d["answer_text"],
            tuple((s["url"], s["snippet"]) for s in d["sources"]),
            ResolvedBy(d["resolved_by"]),
        )


@dataclass(frozen=True)
class QuestionSet:
    """The ordered questions generated for one pair (may be empty)."""

    pair_id: str
    questions: tuple[DisambiguationQuestion, ...]

    def __post_init__(self):
        for q in self.questions:
            if q.pair_id != self.pair_id:
                raise ValueError("all questions must share the set's pair_id")

    def __len__(self) -> int:
        return len(self.questions)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "questions": [q.to_dict() for q in self.questions],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QuestionSet":
        return cls(d["pair_id"], tuple(DisambiguationQuestion.from_dict(q) for q in d["questions"]))


@dataclass(frozen=True)
class EvidenceSet:
    """Answers aligned one-to-one with a QuestionSet."""

    pair_id: str
    answers: tuple[EvidenceAnswer, ...]

    def __len__(self) -> int:
        return len(self.answers)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "answers": [a.to_dict() for a in self.answers],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvidenceSet":
        return cls(d["pair_id"], tuple(EvidenceAnswer.from_dict(a) for a in d["answers"]))


@dataclass(frozen=True)
class MatchVerdict:
    """The engine's decision on one pair, with per-dimension detail."""

    label: VerdictLabel
    dimension_status: dict[MatchDimension, DimensionStatus]
    confidence: float
    rationale: str
    provenance: Provenance

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label.value,
            "dimension_status": {d.value: s.value for d, s in self.dimension_status.items()},
            "confidence": self.confidence,
            "rationale": self.rationale,
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MatchVerdict":
        return cls(
            VerdictLabel(d["label"]),
            {MatchDimension(k): DimensionStatus(v) for k, v in d["dimension_status"].items()},
            float(d["confidence"]),
            d["rationale"],
            Provenance(d["provenance"]),
        )


def validate_verdict(v: MatchVerdict) -> bool:
    """True iff the verdict satisfies all its invariants.

    Checks: confidence in [0,1]; dimension_status has an entry for every
    MatchDimension; all enum fields are proper enum members.
    """
    if not isinstance(v.label, VerdictLabel) or not isinstance(v.provenance, Provenance):
        return False
    if not isinstance(v.confidence, (int, float)):
        return False
    if not (0.0 <= v.confidence <= 1.0):
        return False
    for dim in MatchDimension:
        status = v.dimension_status.get(dim)
        if not isinstance(status, DimensionStatus):
            return False
    return True


@dataclass(frozen=True)
class MappingResult:
    """Full per-pair audit record: verdict plus the reasoning that led to it."""

    pair: ProductPair
    verdict: MatchVerdict
    questions: tuple[DisambiguationQuestion, ...]
    answers: tuple[EvidenceAnswer, ...]
    dedup_activated: bool
    web_queries_issued: int
    wall_time_ms: int

    def __post_init__(self):
        if len(self.answers) > len(self.questions):
            raise ValueError("|answers| must not exceed |questions|")
        if self.web_queries_issued < 0 or self.wall_time_ms < 0:
            raise ValueError("counters must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair": self.pair.to_dict(),
            "verdict": self.verdict.to_dict(),
            "questions": [q.to_dict() for q in self.questions],
            "answers": [a.to_dict() for a in self.answers],
            "dedup_activated": self.dedup_activated,
            "web_queries_issued": self.web_queries_issued,
            "wall_time_ms": self.wall_time_ms,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MappingResult":
        return cls(
            ProductPair.from_dict(d["pair"]),
            MatchVerdict.from_dict(d["verdict"]),
            tuple(DisambiguationQuestion.from_dict(q) for q in d["questions"]),
            tuple(EvidenceAnswer.from_dict(a) for a in d["answers"]),
            bool(d["dedup_activated"]),
            int(d["web_queries_issued"]),
            int(d["wall_time_ms"]),
        )
