"""Append-only repository of validated reasoning traces with exact top-k
cosine retrieval and the information-gain reuse gate.

Persistence is one JSON record per line, UTF-8, with a sidecar file recording
the embedding dimension and config hash (validated on load). Retrieval is an
exhaustive scan — exact by construction, cheap at the store sizes this engine
targets. Traces are immutable once written; corrections enter as new
human-validated traces.
"""

from __future__ import annotations

import json
import math
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .core import EvidenceSet, ProductPair, QuestionSet
from .errors import (
    DimensionMismatch,
    LengthMismatch,
    NoQuestions,
    PersistenceFailure,
    ZeroVector,
)
from .providers import CompletionRequest, ProviderGateway

STATUS_MACHINE = "machine"
STATUS_HUMAN = "human_validated"

DEFAULT_TOP_K = 5
DEFAULT_TAU_SIM = 0.85


def concat_questions(qs: QuestionSet) -> str:
    """Canonical key: 'Question1: {q1}; Question2: {q2}; ...' (1-based)."""
    if not qs.questions:
        raise NoQuestions("cannot build a concat key from zero questions")
    return "; ".join(f"Question{i}: {q.text}" for i, q in enumerate(qs.questions, start=1))


_CONCAT_HEAD = re.compile(r"^Question(\d+): ")


def parse_concat(key: str) -> list[str]:
    """Recover the question texts from a concat key.

    The grammar is unambiguous unless a question text itself contains a
    '; Question<n>: ' separator, in which case that question is split.
    """
    parts = re.split(r"; (?=Question\d+: )", key)
    texts = []
    for i, part in enumerate(parts, start=1):
        m = _CONCAT_HEAD.match(part)
        if not m or int(m.group(1)) != i:
            raise ValueError(f"not a valid concat key: {key!r}")
        texts.append(part[m.end():])
    return texts


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """dot(u,v) / (|u||v|); raises on dimension mismatch or zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for an all-zero vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class ReasoningTrace:
    trace_id: int
    concat_key: str
    questions: QuestionSet
    answers: EvidenceSet
    embedding: np.ndarray
    validation_status: str
    created_at: float

    def to_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "concat_key": self.concat_key,
            "questions": self.questions.to_dict(),
            "answers": self.answers.to_dict(),
            "embedding": [float(x) for x in self.embedding],
            "validation_status": self.validation_status,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReasoningTrace":
        return cls(
            int(d["trace_id"]),
            d["concat_key"],
            QuestionSet.from_dict(d["questions"]),
            EvidenceSet.from_dict(d["answers"]),
            np.asarray(d["embedding"], dtype=np.float64),
            d["validation_status"],
            float(d["created_at"]),
        )


@dataclass(frozen=True)
class RetrievalHit:
    trace: ReasoningTrace
    similarity: float


@dataclass(frozen=True)
class SufficiencyDecision:
    outcome: str  # "Sufficient" | "Insufficient"
    reused_trace_id: Optional[int]
    reason: str

    def __post_init__(self):
        if self.outcome == "Sufficient" and self.reused_trace_id is None:
            raise ValueError("Sufficient decisions must name the reused trace")


class TraceStore:
    """In-memory index over an append-only line-record file.

    Many concurrent readers are fine; writes serialize through one lock and a
    retrieval never observes a partially written trace. ``path=None`` keeps
    the store purely in memory (tests, ephemeral runs).
    """

    def __init__(
        self,
        gateway: ProviderGateway,
        path: Optional[str | Path] = None,
        tau_sim: float = DEFAULT_TAU_SIM,
        config_hash: str = "",
        clock: Callable[[], float] = time.time,
    ):
        self.gateway = gateway
        self.path = Path(path) if path is not None else None
        self.tau_sim = tau_sim
        self.config_hash = config_hash
        self.clock = clock
        self._lock = threading.Lock()
        self._traces: list[ReasoningTrace] = []
        # per-trace (values, norm), precomputed for the retrieval scan
        self._rows: list[tuple[list[float], float]] = []
        self._dim: Optional[int] = None
        if self.path is not None and self.path.exists():
            self._load()

    # --- persistence ---------------------------------------------------------

    @property
    def sidecar_path(self) -> Optional[Path]:
        return None if self.path is None else self.path.with_name(self.path.name + ".meta.json")

    def _load(self) -> None:
        sidecar = self.sidecar_path
        if sidecar is not None and sidecar.exists():
            try:
                meta = json.loads(sidecar.read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                raise PersistenceFailure(f"unreadable sidecar {sidecar}") from exc
            self._dim = int(meta["embedding_dim"])
            if meta.get("config_hash", "") != self.config_hash:
                raise PersistenceFailure(
                    "trace DB was written under a different configuration"
                )
        try:
            raw = self.path.read_bytes()
        except OSError as exc:
            raise PersistenceFailure(f"cannot read trace DB {self.path}") from exc
        # a final chunk without a trailing newline is a torn write: drop it
        complete = raw.split(b"\n")[:-1]
        for lineno, line in enumerate(complete, start=1):
            if not line.strip():
                continue
            try:
                trace = ReasoningTrace.from_dict(json.loads(line.decode("utf-8")))
            except (ValueError, KeyError) as exc:
                raise PersistenceFailure(f"corrupt trace record at line {lineno}") from exc
            self._append_memory(trace)

    def _append_memory(self, trace: ReasoningTrace) -> None:
        if self._dim is None:
            self._dim = int(trace.embedding.shape[0])
        elif trace.embedding.shape[0] != self._dim:
            raise PersistenceFailure(
                f"trace {trace.trace_id} has dimension {trace.embedding.shape[0]}, store has {self._dim}"
            )
        self._traces.append(trace)
        values = [float(x) for x in trace.embedding]
        self._rows.append((values, math.sqrt(sum(x * x for x in values))))

    def _persist(self, trace: ReasoningTrace) -> None:
        if self.path is None:
            return
        try:
            sidecar = self.sidecar_path
            if not sidecar.exists():
                sidecar.write_text(
                    json.dumps(
                        {"embedding_dim": int(trace.embedding.shape[0]), "config_hash": self.config_hash}
                    ),
                    encoding="utf-8",
                )
            with open(self.path, "ab") as fh:
                fh.write(json.dumps(trace.to_dict(), ensure_ascii=False).encode("utf-8"))
                fh.write(b"\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceFailure(f"cannot append to trace DB {self.path}") from exc

    # --- operations ----------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._traces)

    @property
    def embedding_dim(self) -> Optional[int]:
        return self._dim

    def traces(self) -> list[ReasoningTrace]:
        with self._lock:
            return list(self._traces)

    def insert_trace(
        self, qs: QuestionSet, ans: EvidenceSet, status: str = STATUS_MACHINE
    ) -> ReasoningTrace:
        """Persist a new trace append-only; immediately retrievable."""
        if status not in (STATUS_MACHINE, STATUS_HUMAN):
            raise ValueError(f"unknown validation status {status!r}")
        if len(ans.answers) != len(qs.questions):
            raise LengthMismatch(
                f"answers ({len(ans.answers)}) must align with questions ({len(qs.questions)})"
            )
        key = concat_questions(qs)
        embedding = self.gateway.embed(key)
        with self._lock:
            trace = ReasoningTrace(
                trace_id=len(self._traces) + 1,
                concat_key=key,
                questions=qs,
                answers=ans,
                embedding=embedding,
                validation_status=status,
                created_at=self.clock(),
            )
            self._persist(trace)
            self._append_memory(trace)
        return trace

    def retrieve_topk(self, query_key: str, k: int = DEFAULT_TOP_K) -> list[RetrievalHit]:
        """Exact top-k by cosine similarity; ties go to the smaller trace_id.

        Similarities are accumulated sequentially in scalar arithmetic so that
        bitwise-equal embeddings always score bitwise-equal, keeping the
        trace_id tie rule meaningful (vectorized reductions do not guarantee
        that across rows).
        """
        if k < 1:
            raise ValueError("k must be at least 1")
        with self._lock:
            traces = list(self._traces)
            rows = list(self._rows)
        if not traces:
            return []
        q = [float(x) for x in self.gateway.embed(query_key)]
        dim = len(rows[0][0])
        if len(q) != dim:
            raise DimensionMismatch(f"query dim {len(q)} vs store dim {dim}")
        q_norm = math.sqrt(sum(x * x for x in q))
        sims = []
        for values, norm in rows:
            dot = 0.0
            for a, b in zip(values, q):
                dot += a * b
            sims.append(dot / (norm * q_norm))
        order = sorted(range(len(traces)), key=lambda i: (-sims[i], traces[i].trace_id))
        return [RetrievalHit(traces[i], sims[i]) for i in order[: min(k, len(traces))]]

    def assess_information_gain(
        self,
        hits: list[RetrievalHit],
        pair: ProductPair,
        qs: QuestionSet,
        context: Optional[str] = None,
        gateway: Optional[ProviderGateway] = None,
    ) -> SufficiencyDecision:
        """Two-stage reuse gate.

        (a) Similarity screen: no hit at or above tau_sim means Insufficient
        with zero completion calls. (b) One completion judges whether the
        best hit's stored answers resolve the current questions.
        """
        if not hits:
            return SufficiencyDecision("Insufficient", None, "no candidates")
        best = hits[0]
        if best.similarity < self.tau_sim:
            return SufficiencyDecision(
                "Insufficient",
                None,
                f"best similarity {best.similarity:.4f} below threshold {self.tau_sim}",
            )
        from .agents import parse_sufficiency_text  # local import avoids a cycle

        from importlib import resources

        current_key = concat_questions(qs)
        stored_answers = "\n".join(f"- {a.answer_text}" for a in best.trace.answers.answers)
        system = resources.files("skumap.prompts").joinpath("sufficiency.txt").read_text(
            encoding="utf-8"
        )
        user = resources.files("skumap.prompts").joinpath("sufficiency_user.txt").read_text(
            encoding="utf-8"
        ).format(
            base_title=pair.base_title,
            compared_title=pair.compared_title,
            current_questions=current_key,
            stored_questions=best.trace.concat_key,
            stored_answers=stored_answers,
        )
        raw = (gateway or self.gateway).complete(
            CompletionRequest(system, user, response_schema_tag="sufficiency"), context=context
        )
        sufficient, reason = parse_sufficiency_text(raw)
        if sufficient:
            return SufficiencyDecision("Sufficient", best.trace.trace_id, reason)
        return SufficiencyDecision("Insufficient", None, reason)

    def get_trace(self, trace_id: int) -> ReasoningTrace:
        with self._lock:
            for t in self._traces:
                if t.trace_id == trace_id:
                    return t
        raise KeyError(f"no trace with id {trace_id}")
