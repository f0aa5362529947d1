"""Engine configuration and construction.

Precedence for every setting: explicit flag > environment variable
(``SKUMAP_<NAME>``) > config file (TOML) > built-in default. The stub
provider set is the default everywhere; live providers must be requested
explicitly.
"""

from __future__ import annotations

import hashlib
import json
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .errors import FileUnreadable
from .evalharness import load_dataset
from .pipeline import DEFAULT_THETA, MatchingEngine, ReviewQueue
from .providers import CallLog, HeuristicSearchStub, ProviderGateway
from .providers.stubs import (
    HashEmbeddingStub,
    HeuristicChatStub,
    ScriptedChatStub,
    ScriptedSearchStub,
)
from .rules import default_normalization_config, load_brand_dictionary
from .tracestore import DEFAULT_TAU_SIM, DEFAULT_TOP_K, TraceStore

ENV_PREFIX = "SKUMAP_"


@dataclass
class EngineConfig:
    providers: str = "stub"  # stub | live
    tau_sim: float = DEFAULT_TAU_SIM
    theta: float = DEFAULT_THETA
    top_k: int = DEFAULT_TOP_K
    workers: int = 1
    embedding_dim: int = 64
    search_max_results: int = 5
    chat_model: str = "gpt-4o"
    embedding_model: str = "text-embedding-3-small"
    chat_base_url: str = "https://api.openai.com/v1"
    search_endpoint: str = ""
    trace_db: Optional[str] = None
    review_queue: Optional[str] = None
    exemplars_path: Optional[str] = None
    stopwords_path: Optional[str] = None
    units_path: Optional[str] = None
    brands_path: Optional[str] = None
    chat_fixtures: Optional[str] = None
    search_fixtures: Optional[str] = None
    stub_seed: int = 0
    # with stubs, a fixed clock keeps run artifacts byte-reproducible
    deterministic_clock: bool = True

    def config_hash(self) -> str:
        payload = {
            "tau_sim": self.tau_sim,
            "top_k": self.top_k,
            "embedding_dim": self.embedding_dim,
            "embedding_model": self.embedding_model,
            "providers": self.providers,
            "stub_seed": self.stub_seed,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def load_config(
    config_path: Optional[str | Path] = None,
    overrides: Optional[dict[str, Any]] = None,
    env: Optional[dict[str, str]] = None,
) -> EngineConfig:
    """Merge defaults, config file, environment, and explicit overrides."""
    env = os.environ if env is None else env
    merged: dict[str, Any] = {}
    if config_path is not None:
        try:
            with open(config_path, "rb") as fh:
                file_values = tomllib.load(fh)
        except OSError as exc:
            raise FileUnreadable(f"cannot read config file {config_path}") from exc
        merged.update(file_values)
    valid = {f.name: f.type for f in fields(EngineConfig)}
    for name in valid:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            merged[name] = env[env_key]
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    merged = {k: v for k, v in merged.items() if k in valid}
    cfg = EngineConfig(**merged)
    # env/file values may arrive as strings
    for name, caster in (
        ("tau_sim", float),
        ("theta", float),
        ("top_k", int),
        ("workers", int),
        ("embedding_dim", int),
        ("search_max_results", int),
        ("stub_seed", int),
    ):
        setattr(cfg, name, caster(getattr(cfg, name)))
    if isinstance(cfg.deterministic_clock, str):
        cfg.deterministic_clock = cfg.deterministic_clock.lower() in ("1", "true", "yes")
    return cfg


def load_exemplars(path: Optional[str | Path] = None) -> list[tuple[str, str, int]]:
    """Few-shot exemplars from a dataset-format file (shipped default: 8 pairs)."""
    if path is None:
        from importlib import resources

        with resources.as_file(resources.files("skumap.data").joinpath("exemplars.tsv")) as p:
            records = load_dataset(p)
    else:
        records = load_dataset(path)
    return [(r.base_product, r.compared_product, r.label) for r in records]


def build_engine(cfg: EngineConfig) -> MatchingEngine:
    """Wire providers, trace store, and review queue per the config."""
    import time

    call_log = CallLog()
    if cfg.providers == "stub":
        if cfg.chat_fixtures:
            chat = ScriptedChatStub.from_fixture_file(cfg.chat_fixtures)
        else:
            chat = HeuristicChatStub()
        embedder = HashEmbeddingStub(dim=cfg.embedding_dim, seed=cfg.stub_seed)
        if cfg.search_fixtures:
            searcher = ScriptedSearchStub.from_fixture_file(cfg.search_fixtures)
        else:
            searcher = HeuristicSearchStub()
        clock = (lambda: 0.0) if cfg.deterministic_clock else time.time
    elif cfg.providers == "live":
        from .providers.live import (
            HttpSearchAdapter,
            OpenAIChatAdapter,
            OpenAIEmbeddingAdapter,
        )

        chat = OpenAIChatAdapter(model=cfg.chat_model, base_url=cfg.chat_base_url)
        embedder = OpenAIEmbeddingAdapter(model=cfg.embedding_model, base_url=cfg.chat_base_url)
        if not cfg.search_endpoint:
            raise ValueError("live providers require a search_endpoint")
        searcher = HttpSearchAdapter(cfg.search_endpoint)
        clock = time.time
    else:
        raise ValueError(f"unknown provider set {cfg.providers!r}")

    gateway = ProviderGateway(chat, embedder, searcher, call_log=call_log)
    store = TraceStore(
        gateway,
        path=cfg.trace_db,
        tau_sim=cfg.tau_sim,
        config_hash=cfg.config_hash(),
        clock=clock,
    )
    queue = ReviewQueue(path=cfg.review_queue)
    exemplars = load_exemplars(cfg.exemplars_path)
    return MatchingEngine(
        gateway=gateway,
        store=store,
        queue=queue,
        norm_config=default_normalization_config(cfg.stopwords_path, cfg.units_path),
        brand_dictionary=load_brand_dictionary(cfg.brands_path),
        theta=cfg.theta,
        top_k=cfg.top_k,
        search_max_results=cfg.search_max_results,
        exemplars=exemplars,
        clock=clock,
    )
