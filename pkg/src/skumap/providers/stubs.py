"""Deterministic offline providers.

Two flavors of chat stub:

* ``ScriptedChatStub`` replays canned responses, either keyed by the request
  digest or consumed FIFO per response schema tag. Strict by default: an
  unscripted request raises ``StubMiss``.
* ``HeuristicChatStub`` is a pure function of the prompts — it parses the
  titles/questions the agents embed in their prompts and produces plausible
  structured output. It backs desk-scale batch runs where scripting hundreds
  of responses is impractical.

Embeddings come from a seeded hash-to-vector stub, search from scripted
fixtures or a one-result synthetic responder. Replaying the same call
sequence against the same script yields byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import StubMiss
from .base import CompletionRequest, SearchResult


def request_digest(req: CompletionRequest) -> str:
    h = hashlib.sha256()
    h.update(req.system_prompt.encode("utf-8"))
    h.update(b"\x00")
    h.update(req.user_prompt.encode("utf-8"))
    return h.hexdigest()


class ScriptedChatStub:
    name = "chat-stub-scripted"

    def __init__(
        self,
        by_tag: Optional[dict[str, list[str]]] = None,
        by_digest: Optional[dict[str, str]] = None,
        strict: bool = True,
    ):
        self._by_tag = {k: list(v) for k, v in (by_tag or {}).items()}
        self._by_digest = dict(by_digest or {})
        self._strict = strict
        self._lock = threading.Lock()

    @classmethod
    def from_fixture_file(cls, path: str | Path, strict: bool = True) -> "ScriptedChatStub":
        """Load a JSONL fixture: records with 'response' plus 'tag' or 'digest'."""
        by_tag: dict[str, list[str]] = {}
        by_digest: dict[str, str] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            if "digest" in rec:
                by_digest[rec["digest"]] = rec["response"]
            else:
                by_tag.setdefault(rec["tag"], []).append(rec["response"])
        return cls(by_tag=by_tag, by_digest=by_digest, strict=strict)

    def complete(self, req: CompletionRequest) -> str:
        digest = request_digest(req)
        with self._lock:
            if digest in self._by_digest:
                return self._by_digest[digest]
            queue = self._by_tag.get(req.response_schema_tag)
            if queue:
                return queue.pop(0)
        if self._strict:
            raise StubMiss(
                f"no scripted response for tag={req.response_schema_tag!r} digest={digest[:12]}"
            )
        return ""


def _tokens(s: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", s.lower())


def _prompt_field(prompt: str, name: str) -> Optional[str]:
    m = re.search(rf"^{name}: (.*)$", prompt, flags=re.MULTILINE)
    return m.group(1) if m else None


class HeuristicChatStub:
    """Pure-function chat stub: output depends only on the prompts."""

    name = "chat-stub-heuristic"

    def complete(self, req: CompletionRequest) -> str:
        tag = req.response_schema_tag
        if tag == "question_generation":
            return self._questions(req.user_prompt)
        if tag == "evidence_answer":
            return self._answer(req.user_prompt)
        if tag == "verdict":
            return self._verdict(req.user_prompt)
        if tag == "sufficiency":
            return self._sufficiency(req.user_prompt)
        raise StubMiss(f"heuristic stub does not handle tag {tag!r}")

    @staticmethod
    def _titles(prompt: str) -> tuple[str, str]:
        base = _prompt_field(prompt, "BASE")
        compared = _prompt_field(prompt, "COMPARED")
        if base is None or compared is None:
            raise StubMiss("prompt lacks BASE/COMPARED lines")
        return base, compared

    def _questions(self, prompt: str) -> str:
        base, compared = self._titles(prompt)
        ta, tb = _tokens(base), _tokens(compared)
        if ta == tb:
            return "NO_QUESTIONS"
        alpha_a = [t for t in ta if t.isalpha()]
        alpha_b = [t for t in tb if t.isalpha()]
        digit_a = sorted(t for t in ta if any(c.isdigit() for c in t))
        digit_b = sorted(t for t in tb if any(c.isdigit() for c in t))
        lines = []
        if alpha_a[:1] != alpha_b[:1]:
            lines.append(
                f"[Brand] Do '{base}' and '{compared}' come from the same manufacturer?"
            )
        if digit_a != digit_b:
            lines.append(
                f"[Quantity] Do the pack sizes of '{base}' and '{compared}' match?"
            )
        if set(alpha_a) != set(alpha_b) and not lines:
            lines.append(
                f"[CoreProductName] Are '{base}' and '{compared}' the same product line?"
            )
        if not lines:
            lines.append(
                f"[Specification] Do '{base}' and '{compared}' share the same specification?"
            )
        return "\n".join(lines)

    @staticmethod
    def _answer(prompt: str) -> str:
        question = _prompt_field(prompt, "QUESTION") or ""
        digest = hashlib.sha256(question.encode("utf-8")).hexdigest()[:10]
        return (
            f"The consulted listings indicate a consistent answer (ref {digest}): "
            "the attribute in question is described identically by both sources."
        )

    def _verdict(self, prompt: str) -> str:
        base, compared = self._titles(prompt)
        sa, sb = set(_tokens(base)), set(_tokens(compared))
        union = sa | sb
        jaccard = len(sa & sb) / len(union) if union else 1.0
        alpha_a = [t for t in sorted(sa) if t.isalpha()]
        alpha_b = [t for t in sorted(sb) if t.isalpha()]
        first_a = _tokens(base)[:1]
        first_b = _tokens(compared)[:1]
        digits_a = sorted(t for t in sa if any(c.isdigit() for c in t))
        digits_b = sorted(t for t in sb if any(c.isdigit() for c in t))

        if sa == sb:
            label, confidence = "Equivalent", 1.0
        elif jaccard >= 0.6:
            label, confidence = "Equivalent", 0.9
        else:
            label, confidence = "NonEquivalent", 0.9
        if label == "Equivalent":
            brand = core = quantity = "Match"
            variant = spec = "Match" if sa == sb else "Unknown"
        else:
            brand = "Mismatch" if first_a != first_b else "Match"
            quantity = "Mismatch" if digits_a != digits_b else "Match"
            core = "Mismatch" if set(alpha_a) != set(alpha_b) else "Match"
            variant = spec = "Unknown"
        return (
            f"label: {label}\n"
            f"confidence: {confidence}\n"
            f"brand: {brand}\n"
            f"core_product_name: {core}\n"
            f"variant: {variant}\n"
            f"specification: {spec}\n"
            f"quantity: {quantity}\n"
            f"rationale: token overlap {jaccard:.2f} between the two listings"
        )

    @staticmethod
    def _sufficiency(prompt: str) -> str:
        current = _prompt_field(prompt, "CURRENT QUESTIONS")
        stored = _prompt_field(prompt, "STORED QUESTIONS")
        if current is not None and current == stored:
            return "decision: sufficient\nreason: stored reasoning covers the same questions"
        return "decision: insufficient\nreason: stored questions differ from the current ones"


class HashEmbeddingStub:
    """Seeded hash-to-vector embeddings: equal texts get equal vectors."""

    name = "embed-stub-hash"

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 2:
            raise ValueError("embedding dimension must be at least 2")
        self.dim = dim
        self.seed = seed

    def embed(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.seed}:{text}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        vec = rng.standard_normal(self.dim)
        return vec / np.linalg.norm(vec)


class ScriptedSearchStub:
    name = "search-stub-scripted"

    def __init__(self, fixtures: Optional[dict[str, list[SearchResult]]] = None, strict: bool = False):
        self._fixtures = dict(fixtures or {})
        self._strict = strict

    @classmethod
    def from_fixture_file(cls, path: str | Path, strict: bool = False) -> "ScriptedSearchStub":
        """Load a JSONL fixture: {'query': ..., 'results': [{url,title,snippet}]}."""
        fixtures: dict[str, list[SearchResult]] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            fixtures[rec["query"]] = [
                SearchResult(r["url"], r.get("title", ""), r.get("snippet", ""), i)
                for i, r in enumerate(rec["results"], start=1)
            ]
        return cls(fixtures, strict=strict)

    def search(self, query: str, max_results: int) -> list[SearchResult]:
        hits = self._fixtures.get(query)
        if hits is None:
            if self._strict:
                raise StubMiss(f"no search fixture for query {query!r}")
            return []
        return hits[:max_results]


class HeuristicSearchStub:
    """Always returns one deterministic synthetic result per query."""

    name = "search-stub-heuristic"

    def search(self, query: str, max_results: int) -> list[SearchResult]:
        digest = hashlib.sha256(query.encode("utf-8")).hexdigest()[:12]
        return [
            SearchResult(
                url=f"https://catalog.example/{digest}",
                title=f"Reference listing {digest[:6]}",
                snippet=f"Catalog entry relevant to: {query[:120]}",
                rank=1,
            )
        ][:max_results]
