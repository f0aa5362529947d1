"""Uniform contracts for the three external capabilities.

Chat completion, text embedding, and web search each sit behind a small
protocol; the ProviderGateway wraps concrete adapters with input validation,
embedding-dimension enforcement, and a thread-safe call log consumed by the
run accounting.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

import numpy as np

from ..errors import EmptyQuery, EmptyText, ProviderUnavailable


@dataclass(frozen=True)
class CompletionRequest:
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    response_schema_tag: str = ""


@dataclass(frozen=True)
class SearchResult:
    url: str
    title: str
    snippet: str
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")


@runtime_checkable
class ChatProvider(Protocol):
    name: str

    def complete(self, req: CompletionRequest) -> str: ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    name: str

    def embed(self, text: str) -> np.ndarray: ...


@runtime_checkable
class SearchProvider(Protocol):
    name: str

    def search(self, query: str, max_results: int) -> list[SearchResult]: ...


@dataclass(frozen=True)
class CallEntry:
    provider: str
    kind: str  # complete | embed | search
    elapsed_ms: float
    ok: bool
    context: Optional[str] = None


class CallLog:
    """Append-only log of provider calls; appends are atomic per entry."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: list[CallEntry] = []

    def append(self, entry: CallEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    def entries(self) -> list[CallEntry]:
        with self._lock:
            return list(self._entries)

    def count(self, kind: Optional[str] = None, context: Optional[str] = None) -> int:
        with self._lock:
            return sum(
                1
                for e in self._entries
                if (kind is None or e.kind == kind)
                and (context is None or e.context == context)
            )


class ProviderGateway:
    """Validated, logged access to chat, embedding, and search providers.

    The embedding dimension is pinned on the first successful embed call and
    enforced for the rest of the process lifetime.
    """

    def __init__(
        self,
        chat: ChatProvider,
        embedder: EmbeddingProvider,
        searcher: SearchProvider,
        call_log: Optional[CallLog] = None,
        expected_dim: Optional[int] = None,
    ):
        self.chat = chat
        self.embedder = embedder
        self.searcher = searcher
        self.call_log = call_log or CallLog()
        self._dim = expected_dim
        self._dim_lock = threading.Lock()

    @property
    def embedding_dim(self) -> Optional[int]:
        return self._dim

    def _timed(self, provider: str, kind: str, context: Optional[str], fn):
        start = time.perf_counter()
        ok = False
        try:
            out = fn()
            ok = True
            return out
        finally:
            elapsed = (time.perf_counter() - start) * 1000.0
            self.call_log.append(CallEntry(provider, kind, elapsed, ok, context))

    def complete(self, req: CompletionRequest, context: Optional[str] = None) -> str:
        if not req.system_prompt.strip() or not req.user_prompt.strip():
            raise EmptyText("completion prompts must be non-empty")
        return self._timed(self.chat.name, "complete", context, lambda: self.chat.complete(req))

    def embed(self, text: str, context: Optional[str] = None) -> np.ndarray:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
        vec = self._timed(self.embedder.name, "embed", context, lambda: self.embedder.embed(text))
        vec = np.asarray(vec, dtype=np.float64)
        if vec.ndim != 1:
            raise ProviderUnavailable("embedding provider returned a non-vector")
        if not np.any(vec):
            raise ProviderUnavailable("embedding provider returned an all-zero vector")
        with self._dim_lock:
            if self._dim is None:
                self._dim = int(vec.shape[0])
            elif vec.shape[0] != self._dim:
                raise ProviderUnavailable(
                    f"embedding dimension changed: expected {self._dim}, got {vec.shape[0]}"
                )
        return vec

    def search(
        self, query: str, max_results: int = 5, context: Optional[str] = None
    ) -> list[SearchResult]:
        if not query.strip():
            raise EmptyQuery("search query must be non-empty")
        if max_results < 1:
            raise ValueError("max_results must be positive")
        results = self._timed(
            self.searcher.name, "search", context, lambda: self.searcher.search(query, max_results)
        )
        results = list(results)[:max_results]
        for i, r in enumerate(results, start=1):
            if r.rank != i:
                raise ProviderUnavailable("search ranks must be unique and contiguous from 1")
        return results
