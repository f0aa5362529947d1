from .base import (
    CallEntry,
    CallLog,
    ChatProvider,
    CompletionRequest,
    EmbeddingProvider,
    ProviderGateway,
    SearchProvider,
    SearchResult,
)
from .stubs import (
    HashEmbeddingStub,
    HeuristicChatStub,
    HeuristicSearchStub,
    ScriptedChatStub,
    ScriptedSearchStub,
)

__all__ = [
    "CallEntry",
    "CallLog",
    "ChatProvider",
    "CompletionRequest",
    "EmbeddingProvider",
    "ProviderGateway",
    "SearchProvider",
    "SearchResult",
    "HashEmbeddingStub",
    "HeuristicChatStub",
    "HeuristicSearchStub",
    "ScriptedChatStub",
    "ScriptedSearchStub",
]
