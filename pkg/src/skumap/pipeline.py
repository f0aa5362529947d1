"""End-to-end orchestration: per-pair mapping in all five modes,
confidence-based escalation to the human review queue, review decisions
feeding corrected traces back into the store, and batch execution.

The question-driven mode (``q2k``) runs: generate questions; if any were
generated, retrieve similar stored traces and run the reuse gate; reuse
stored answers when the gate says they suffice (no web searches), otherwise
answer every question freshly and store the new trace. Low-confidence
verdicts are escalated instead of stored — reasoning enters the knowledge
base only once it is either confident or human-validated.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional

from .agents import answer_question, generate_questions, synthesize_verdict
from .core import (
    DimensionStatus,
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
)
from .errors import (
    AlreadyDecided,
    EmptyInput,
    NoEvidenceFound,
    NotFound,
    PersistenceFailure,
    SkuMapError,
)
from .providers import CompletionRequest, ProviderGateway, SearchResult
from .rules import BrandDictionary, NormalizationConfig, rule_verdict
from .tracestore import (
    STATUS_HUMAN,
    STATUS_MACHINE,
    TraceStore,
    concat_questions,
)

DEFAULT_THETA = 0.7


class MappingMode(str, Enum):
    RULE = "rule"
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"
    WEB_SEARCH = "web_search"
    Q2K = "q2k"


class _MeteredGateway:
    """Per-pair view over the shared gateway that counts its own calls."""

    def __init__(self, inner: ProviderGateway, context: str):
        self._inner = inner
        self._context = context
        self.completions = 0
        self.searches = 0

    def complete(self, req: CompletionRequest, context: Optional[str] = None) -> str:
        self.completions += 1
        return self._inner.complete(req, context=self._context)

    def embed(self, text: str, context: Optional[str] = None):
        return self._inner.embed(text, context=self._context)

    def search(self, query: str, max_results: int = 5, context: Optional[str] = None):
        self.searches += 1
        return self._inner.search(query, max_results, context=self._context)


# --- review queue -----------------------------------------------------------

REVIEW_PENDING = "pending"
REVIEW_APPROVED = "approved"
REVIEW_OVERRIDDEN = "overridden"


@dataclass(frozen=True)
class ReviewItem:
    item_id: str
    result: MappingResult
    status: str
    reviewer_note: Optional[str] = None
    corrected_label: Optional[VerdictLabel] = None
    decided_at: Optional[float] = None
    reason: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "item_id": self.item_id,
            "result": self.result.to_dict(),
            "status": self.status,
            "reviewer_note": self.reviewer_note,
            "corrected_label": None if self.corrected_label is None else self.corrected_label.value,
            "decided_at": self.decided_at,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ReviewItem":
        return cls(
            d["item_id"],
            MappingResult.from_dict(d["result"]),
            d["status"],
            d.get("reviewer_note"),
            None if d.get("corrected_label") is None else VerdictLabel(d["corrected_label"]),
            d.get("decided_at"),
            d.get("reason", ""),
        )


class ReviewQueue:
    """Review items persisted as an append-only event log (one JSON record
    per state change); the current state of an item is its last record."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._order: list[str] = []
        self._seq = 0
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        try:
            raw = self.path.read_bytes()
        except OSError as exc:
            raise PersistenceFailure(f"cannot read review queue {self.path}") from exc
        for line in raw.split(b"\n")[:-1]:
            if not line.strip():
                continue
            try:
                item = ReviewItem.from_dict(json.loads(line.decode("utf-8")))
            except (ValueError, KeyError) as exc:
                raise PersistenceFailure("corrupt review queue record") from exc
            if item.item_id not in self._items:
                self._order.append(item.item_id)
            self._items[item.item_id] = item
            num = int(item.item_id.rsplit("-", 1)[1])
            self._seq = max(self._seq, num)

    def _persist(self, item: ReviewItem) -> None:
        if self.path is None:
            return
        try:
            with open(self.path, "ab") as fh:
                fh.write(json.dumps(item.to_dict(), ensure_ascii=False).encode("utf-8"))
                fh.write(b"\n")
                fh.flush()
        except OSError as exc:
            raise PersistenceFailure(f"cannot append to review queue {self.path}") from exc

    def add(self, result: MappingResult, reason: str) -> ReviewItem:
        with self._lock:
            self._seq += 1
            item = ReviewItem(
                item_id=f"item-{self._seq:06d}",
                result=result,
                status=REVIEW_PENDING,
                reason=reason,
            )
            self._persist(item)
            self._items[item.item_id] = item
            self._order.append(item.item_id)
        return item

    def get(self, item_id: str) -> ReviewItem:
        with self._lock:
            if item_id not in self._items:
                raise NotFound(f"no review item {item_id}")
            return self._items[item_id]

    def update(self, item: ReviewItem) -> None:
        with self._lock:
            if item.item_id not in self._items:
                raise NotFound(f"no review item {item.item_id}")
            self._persist(item)
            self._items[item.item_id] = item

    def list_items(self, status: Optional[str] = None) -> list[ReviewItem]:
        """Items in creation order, optionally filtered by status."""
        with self._lock:
            items = [self._items[i] for i in self._order]
        if status is not None:
            items = [i for i in items if i.status == status]
        return items


# --- run log ------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    pair_id: str
    mode: str
    questions_generated: int
    dedup_activated: bool
    web_queries_issued: int
    completion_calls: int
    gate_calls: int
    verdict_label: Optional[str]
    confidence: Optional[float]
    escalated: bool
    failed: bool = False
    error: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "mode": self.mode,
            "questions_generated": self.questions_generated,
            "dedup_activated": self.dedup_activated,
            "web_queries_issued": self.web_queries_issued,
            "completion_calls": self.completion_calls,
            "gate_calls": self.gate_calls,
            "verdict_label": self.verdict_label,
            "confidence": self.confidence,
            "escalated": self.escalated,
            "failed": self.failed,
            "error": self.error,
        }


@dataclass
class RunLog:
    records: list[RunRecord]

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _unknown_verdict(provenance: Provenance, rationale: str) -> MatchVerdict:
    return MatchVerdict(
        label=VerdictLabel.NON_EQUIVALENT,
        dimension_status={d: DimensionStatus.UNKNOWN for d in MatchDimension},
        confidence=0.0,
        rationale=rationale,
        provenance=provenance,
    )


# --- engine -------------------------------------------------------------------

class MatchingEngine:
    """Owns the providers, trace store, review queue, and thresholds."""

    def __init__(
        self,
        gateway: ProviderGateway,
        store: TraceStore,
        queue: ReviewQueue,
        norm_config: NormalizationConfig,
        brand_dictionary: BrandDictionary,
        theta: float = DEFAULT_THETA,
        top_k: int = 5,
        search_max_results: int = 5,
        exemplars: Optional[list[tuple[str, str, int]]] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.gateway = gateway
        self.store = store
        self.queue = queue
        self.norm_config = norm_config
        self.brand_dictionary = brand_dictionary
        self.theta = theta
        self.top_k = top_k
        self.search_max_results = search_max_results
        self.exemplars = exemplars or []
        self.clock = clock
        self._log_lock = threading.Lock()
        self.lifetime_log = RunLog(records=[])

    # -- per-pair mapping ------------------------------------------------------

    def map_pair(self, pair: ProductPair, mode: MappingMode) -> MappingResult:
        result, record = self._process(pair, mode)
        with self._log_lock:
            self.lifetime_log.records.append(record)
        return result

    def _process(self, pair: ProductPair, mode: MappingMode) -> tuple[MappingResult, RunRecord]:
        start = self.clock()
        meter = _MeteredGateway(self.gateway, pair.pair_id)

        if mode is MappingMode.RULE:
            verdict = rule_verdict(pair, self.norm_config, self.brand_dictionary)
            result = self._finish(pair, verdict, (), (), False, meter, start)
            return result, self._record(pair, mode, 0, result, gate_calls=0, meter=meter)

        if mode is MappingMode.ZERO_SHOT:
            verdict = synthesize_verdict(
                meter, pair, EvidenceSet(pair.pair_id, ()), Provenance.ZERO_SHOT
            )
            result = self._finish(pair, verdict, (), (), False, meter, start)
            return result, self._record(pair, mode, 0, result, 0, meter)

        if mode is MappingMode.FEW_SHOT:
            if not self.exemplars:
                raise EmptyInput("few_shot mode requires a non-empty exemplar list")
            verdict = synthesize_verdict(
                meter,
                pair,
                EvidenceSet(pair.pair_id, ()),
                Provenance.FEW_SHOT,
                exemplars=self.exemplars,
            )
            result = self._finish(pair, verdict, (), (), False, meter, start)
            return result, self._record(pair, mode, 0, result, 0, meter)

        if mode is MappingMode.WEB_SEARCH:
            hits = meter.search(
                f"{pair.base_title} {pair.compared_title}", self.search_max_results
            )
            snippets = [f"{r.url}: {r.snippet}" for r in hits]
            verdict = synthesize_verdict(
                meter,
                pair,
                EvidenceSet(pair.pair_id, ()),
                Provenance.WEB_SEARCH,
                context_snippets=snippets,
            )
            result = self._finish(pair, verdict, (), (), False, meter, start)
            return result, self._record(pair, mode, 0, result, 0, meter)

        return self._process_q2k(pair, meter, start)

    def _process_q2k(
        self, pair: ProductPair, meter: _MeteredGateway, start: float
    ) -> tuple[MappingResult, RunRecord]:
        qs = generate_questions(meter, pair)
        m = len(qs)
        gate_calls = 0
        dedup = False
        answers: tuple[EvidenceAnswer, ...] = ()

        if m == 0:
            verdict = synthesize_verdict(
                meter, pair, EvidenceSet(pair.pair_id, ()), Provenance.Q2K_FRESH
            )
        else:
            key = concat_questions(qs)
            hits = self.store.retrieve_topk(key, self.top_k)
            decision = self.store.assess_information_gain(hits, pair, qs, gateway=meter)
            if hits and hits[0].similarity >= self.store.tau_sim:
                gate_calls = 1
            if decision.outcome == "Sufficient":
                trace = self.store.get_trace(decision.reused_trace_id)
                answers = _adopt_stored_answers(qs, trace.answers)
                verdict = synthesize_verdict(
                    meter, pair, EvidenceSet(pair.pair_id, answers), Provenance.Q2K_REUSED
                )
                dedup = True
            else:
                try:
                    answers = tuple(
                        answer_question(meter, q, pair, self.search_max_results)
                        for q in qs.questions
                    )
                except NoEvidenceFound as exc:
                    verdict = _unknown_verdict(
                        Provenance.Q2K_FRESH, f"no evidence found: {exc}"
                    )
                    result = self._finish(
                        pair, verdict, qs.questions, (), dedup, meter, start, force_escalate=True
                    )
                    return result, self._record(pair, MappingMode.Q2K, m, result, gate_calls, meter)
                evidence = EvidenceSet(pair.pair_id, answers)
                verdict = synthesize_verdict(meter, pair, evidence, Provenance.Q2K_FRESH)
                if verdict.confidence >= self.theta:
                    self.store.insert_trace(qs, evidence, STATUS_MACHINE)

        result = self._finish(pair, verdict, qs.questions, answers, dedup, meter, start)
        return result, self._record(pair, MappingMode.Q2K, m, result, gate_calls, meter)

    def _finish(
        self,
        pair: ProductPair,
        verdict: MatchVerdict,
        questions,
        answers,
        dedup: bool,
        meter: _MeteredGateway,
        start: float,
        force_escalate: bool = False,
    ) -> MappingResult:
        wall_ms = max(0, int((self.clock() - start) * 1000))
        result = MappingResult(
            pair=pair,
            verdict=verdict,
            questions=tuple(questions),
            answers=tuple(answers),
            dedup_activated=dedup,
            web_queries_issued=meter.searches,
            wall_time_ms=wall_ms,
        )
        if force_escalate or verdict.confidence < self.theta:
            self.escalate(result, forced=force_escalate)
        return result

    def _record(
        self,
        pair: ProductPair,
        mode: MappingMode,
        m: int,
        result: MappingResult,
        gate_calls: int,
        meter: _MeteredGateway,
    ) -> RunRecord:
        return RunRecord(
            pair_id=pair.pair_id,
            mode=mode.value,
            questions_generated=m,
            dedup_activated=result.dedup_activated,
            web_queries_issued=result.web_queries_issued,
            completion_calls=meter.completions,
            gate_calls=gate_calls,
            verdict_label=result.verdict.label.value,
            confidence=result.verdict.confidence,
            escalated=result.verdict.confidence < self.theta,
        )

    # -- escalation / review ----------------------------------------------------

    def escalate(self, result: MappingResult, forced: bool = False) -> ReviewItem:
        """Queue a low-confidence result for human review."""
        if not forced and result.verdict.confidence >= self.theta:
            raise ValueError(
                f"confidence {result.verdict.confidence} is not below threshold {self.theta}"
            )
        reason = (
            "no evidence found"
            if forced
            else f"confidence {result.verdict.confidence} below threshold {self.theta}"
        )
        return self.queue.add(result, reason)

    def apply_review(
        self,
        item_id: str,
        decision: str,
        corrected_label: Optional[VerdictLabel] = None,
        note: Optional[str] = None,
    ) -> ReviewItem:
        """Terminal transition of a pending item; corrections feed the store.

        approve: the item's reasoning (when aligned) is re-inserted as a
        human-validated trace. override: the label is replaced and a
        human-validated trace embedding the reviewer's note is inserted.
        """
        item = self.queue.get(item_id)
        if item.status != REVIEW_PENDING:
            raise AlreadyDecided(f"item {item_id} is already {item.status}")
        if decision not in ("approve", "override"):
            raise ValueError(f"unknown review decision {decision!r}")
        if decision == "override" and corrected_label is None:
            raise ValueError("override requires a corrected_label")

        result = item.result
        questions = QuestionSet(result.pair.pair_id, result.questions)

        if decision == "approve":
            if result.questions and len(result.answers) == len(result.questions):
                self.store.insert_trace(
                    questions, EvidenceSet(result.pair.pair_id, result.answers), STATUS_HUMAN
                )
            updated = replace(item, status=REVIEW_APPROVED, reviewer_note=note,
                              decided_at=self.clock())
        else:
            if result.questions:
                answers = _reviewer_answers(questions, result.answers, note)
                self.store.insert_trace(
                    questions, EvidenceSet(result.pair.pair_id, answers), STATUS_HUMAN
                )
            corrected = replace(result, verdict=replace(result.verdict, label=corrected_label))
            updated = replace(
                item,
                result=corrected,
                status=REVIEW_OVERRIDDEN,
                reviewer_note=note,
                corrected_label=corrected_label,
                decided_at=self.clock(),
            )
        self.queue.update(updated)
        return updated

    # -- batch -------------------------------------------------------------------

    def run_batch(
        self, pairs: list[ProductPair], mode: MappingMode, workers: int = 1
    ) -> RunLog:
        """One record per pair, in input order; per-pair failures never abort
        the batch."""
        if not pairs:
            raise EmptyInput("run_batch requires at least one pair")
        if workers < 1:
            raise ValueError("workers must be positive")

        def one(pair: ProductPair) -> RunRecord:
            try:
                _, record = self._process(pair, mode)
                return record
            except SkuMapError as exc:
                return RunRecord(
                    pair_id=pair.pair_id,
                    mode=mode.value,
                    questions_generated=0,
                    dedup_activated=False,
                    web_queries_issued=0,
                    completion_calls=0,
                    gate_calls=0,
                    verdict_label=None,
                    confidence=None,
                    escalated=False,
                    failed=True,
                    error=f"{type(exc).__name__}: {exc}",
                )

        if workers == 1:
            records = [one(p) for p in pairs]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(one, pairs))
        with self._log_lock:
            self.lifetime_log.records.extend(records)
        return RunLog(records=records)


def _adopt_stored_answers(
    qs: QuestionSet, stored: EvidenceSet
) -> tuple[EvidenceAnswer, ...]:
    """Re-key a stored trace's answers to the current question set."""
    texts = [a.answer_text for a in stored.answers]
    combined = "; ".join(texts) if texts else "reused trace"
    out = []
    for i, q in enumerate(qs.questions):
        out.append(
            EvidenceAnswer(
                question_id=q.question_id,
                answer_text=texts[i] if i < len(texts) else combined,
                sources=(),
                resolved_by=ResolvedBy.REUSED_TRACE,
            )
        )
    return tuple(out)


def _reviewer_answers(
    qs: QuestionSet, answers: tuple[EvidenceAnswer, ...], note: Optional[str]
) -> tuple[EvidenceAnswer, ...]:
    """Answers for an overridden item, carrying the reviewer's note."""
    suffix = f" [reviewer: {note}]" if note else " [reviewer correction]"
    out = []
    for i, q in enumerate(qs.questions):
        if i < len(answers):
            a = answers[i]
            out.append(replace(a, answer_text=a.answer_text + suffix))
        else:
            out.append(
                EvidenceAnswer(
                    question_id=q.question_id,
                    answer_text=(note or "reviewer correction") + suffix,
                    sources=(),
                    resolved_by=ResolvedBy.REUSED_TRACE,
                )
            )
    return tuple(out)
