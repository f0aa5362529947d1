import pytest

from skumap.core import new_pair
from skumap.pipeline import MatchingEngine, ReviewQueue
from skumap.providers import CallLog, CompletionRequest, ProviderGateway
from skumap.providers.stubs import (
    HashEmbeddingStub,
    HeuristicChatStub,
    HeuristicSearchStub,
)
from skumap.rules import default_normalization_config, load_brand_dictionary
from skumap.tracestore import TraceStore


class RecordingChat:
    """Wraps a chat provider, keeping every request for prompt assertions."""

    name = "chat-recording"

    def __init__(self, inner):
        self.inner = inner
        self.requests: list[CompletionRequest] = []

    def complete(self, req):
        self.requests.append(req)
        return self.inner.complete(req)


def make_gateway(chat=None, embedder=None, searcher=None, dim=32, seed=0):
    return ProviderGateway(
        chat or HeuristicChatStub(),
        embedder or HashEmbeddingStub(dim=dim, seed=seed),
        searcher or HeuristicSearchStub(),
        call_log=CallLog(),
    )


def make_engine(
    chat=None,
    searcher=None,
    trace_path=None,
    queue_path=None,
    theta=0.7,
    tau_sim=0.85,
    dim=32,
):
    gateway = make_gateway(chat=chat, searcher=searcher, dim=dim)
    store = TraceStore(gateway, path=trace_path, tau_sim=tau_sim, clock=lambda: 0.0)
    return MatchingEngine(
        gateway=gateway,
        store=store,
        queue=ReviewQueue(path=queue_path),
        norm_config=default_normalization_config(),
        brand_dictionary=load_brand_dictionary(),
        theta=theta,
        clock=lambda: 0.0,
    )


@pytest.fixture
def gateway():
    return make_gateway()


@pytest.fixture
def engine():
    return make_engine()


@pytest.fixture
def table_pair():
    """The annotation-difficulty example pair from the corpus docs."""
    return new_pair(
        "MegaDoseD Vitamin D3 4000IU, 120 tablets × 3 (12 months)",
        "Korea Eundan MegaDoseD Vitamin D3 4000IU Swiss-made, 120 tablets × 3 (12 months)",
    )
