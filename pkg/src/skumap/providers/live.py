"""Live HTTP adapters for chat, embeddings, and web search.

Chat and embeddings speak the common OpenAI-style JSON wire shape; the search
adapter targets a configurable JSON endpoint since no single search provider
is assumed. Credentials come from environment variables; transient failures
are retried with exponential backoff before raising ProviderUnavailable.
"""

from __future__ import annotations

import os
import time
from typing import Optional

import httpx
import numpy as np

from ..errors import ProviderRefused, ProviderUnavailable
from .base import CompletionRequest, SearchResult

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_S = 0.5


def _request_with_retries(
    client: httpx.Client,
    method: str,
    url: str,
    retries: int,
    backoff_s: float,
    sleep=time.sleep,
    **kwargs,
) -> httpx.Response:
    last_error: Optional[Exception] = None
    for attempt in range(retries):
        try:
            resp = client.request(method, url, **kwargs)
        except httpx.HTTPError as exc:
            last_error = exc
        else:
            if resp.status_code < 400:
                return resp
            if resp.status_code in (408, 429) or resp.status_code >= 500:
                last_error = ProviderUnavailable(f"HTTP {resp.status_code} from {url}")
            else:
                raise ProviderRefused(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
        if attempt + 1 < retries:
            sleep(backoff_s * (2**attempt))
    raise ProviderUnavailable(f"{url} unreachable after {retries} attempts") from last_error


class OpenAIChatAdapter:
    name = "chat-live"

    def __init__(
        self,
        model: str = "gpt-4o",
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "SKUMAP_CHAT_API_KEY",
        client: Optional[httpx.Client] = None,
        retries: int = DEFAULT_RETRIES,
        backoff_s: float = DEFAULT_BACKOFF_S,
    ):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=60.0)
        self.retries = retries
        self.backoff_s = backoff_s

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ProviderRefused(f"missing credential env var {self.api_key_env}")
        return {"Authorization": f"Bearer {key}"}

    def complete(self, req: CompletionRequest) -> str:
        body = {
            "model": self.model,
            "temperature": req.temperature,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
        }
        resp = _request_with_retries(
            self._client,
            "POST",
            f"{self.base_url}/chat/completions",
            self.retries,
            self.backoff_s,
            json=body,
            headers=self._headers(),
        )
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderUnavailable("chat response had an unexpected shape") from exc


class OpenAIEmbeddingAdapter:
    name = "embed-live"

    def __init__(
        self,
        model: str = "text-embedding-3-small",
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "SKUMAP_EMBED_API_KEY",
        client: Optional[httpx.Client] = None,
        retries: int = DEFAULT_RETRIES,
        backoff_s: float = DEFAULT_BACKOFF_S,
    ):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=60.0)
        self.retries = retries
        self.backoff_s = backoff_s

    def embed(self, text: str) -> np.ndarray:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ProviderRefused(f"missing credential env var {self.api_key_env}")
        resp = _request_with_retries(
            self._client,
            "POST",
            f"{self.base_url}/embeddings",
            self.retries,
            self.backoff_s,
            json={"model": self.model, "input": text},
            headers={"Authorization": f"Bearer {key}"},
        )
        try:
            return np.asarray(resp.json()["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderUnavailable("embedding response had an unexpected shape") from exc


class HttpSearchAdapter:
    """Generic JSON search endpoint: GET {endpoint}?q=...&n=...

    Expects a JSON array of objects with url/title/snippet fields, most
    relevant first. Point it at whatever search service is available.
    """

    name = "search-live"

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = "SKUMAP_SEARCH_API_KEY",
        client: Optional[httpx.Client] = None,
        retries: int = DEFAULT_RETRIES,
        backoff_s: float = DEFAULT_BACKOFF_S,
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=30.0)
        self.retries = retries
        self.backoff_s = backoff_s

    def search(self, query: str, max_results: int) -> list[SearchResult]:
        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        resp = _request_with_retries(
            self._client,
            "GET",
            self.endpoint,
            self.retries,
            self.backoff_s,
            params={"q": query, "n": max_results},
            headers=headers,
        )
        try:
            raw = resp.json()
        except ValueError as exc:
            raise ProviderUnavailable("search response was not JSON") from exc
        out = []
        for i, item in enumerate(raw[:max_results], start=1):
            out.append(
                SearchResult(
                    url=item.get("url", ""),
                    title=item.get("title", ""),
                    snippet=item.get("snippet", ""),
                    rank=i,
                )
            )
        return out
