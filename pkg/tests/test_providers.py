import httpx
import numpy as np
import pytest

from skumap.errors import EmptyQuery, EmptyText, ProviderRefused, ProviderUnavailable, StubMiss
from skumap.providers import CompletionRequest, ProviderGateway, SearchResult
from skumap.providers.live import HttpSearchAdapter, OpenAIChatAdapter
from skumap.providers.stubs import (
    HashEmbeddingStub,
    HeuristicChatStub,
    ScriptedChatStub,
    ScriptedSearchStub,
    request_digest,
)

from conftest import make_gateway


def req(user="hello", tag="verdict"):
    return CompletionRequest("system", user, response_schema_tag=tag)


class TestScriptedChatStub:
    def test_scripted_response_returned(self):
        r = req("prompt P")
        stub = ScriptedChatStub(by_digest={request_digest(r): "yes"})
        assert stub.complete(r) == "yes"

    def test_strict_miss_raises(self):
        stub = ScriptedChatStub()
        with pytest.raises(StubMiss):
            stub.complete(req("unscripted"))

    def test_tag_queue_consumed_in_order(self):
        stub = ScriptedChatStub(by_tag={"verdict": ["first", "second"]})
        assert stub.complete(req("a")) == "first"
        assert stub.complete(req("b")) == "second"
        with pytest.raises(StubMiss):
            stub.complete(req("c"))

    def test_replay_is_byte_identical(self):
        script = {"verdict": ["one", "two"], "sufficiency": ["three"]}
        outs = []
        for _ in range(2):
            stub = ScriptedChatStub(by_tag={k: list(v) for k, v in script.items()})
            outs.append(
                (
                    stub.complete(req("a", "verdict")),
                    stub.complete(req("b", "sufficiency")),
                    stub.complete(req("c", "verdict")),
                )
            )
        assert outs[0] == outs[1]


class TestHashEmbeddingStub:
    def test_equal_texts_equal_vectors(self):
        stub = HashEmbeddingStub(dim=32)
        assert np.array_equal(stub.embed("abc"), stub.embed("abc"))

    def test_different_texts_differ(self):
        stub = HashEmbeddingStub(dim=32)
        assert not np.array_equal(stub.embed("abc"), stub.embed("abd"))

    def test_no_collisions_over_corpus(self):
        stub = HashEmbeddingStub(dim=32)
        corpus = [f"question number {i}" for i in range(500)]
        vecs = {tuple(np.round(stub.embed(t), 9)) for t in corpus}
        assert len(vecs) == len(corpus)

    def test_dimension_constant(self):
        stub = HashEmbeddingStub(dim=48)
        assert stub.embed("a").shape == (48,)
        assert stub.embed("something else entirely").shape == (48,)


class TestSearchStubs:
    def fixture_results(self):
        return [
            SearchResult("https://a", "A", "sa", 1),
            SearchResult("https://b", "B", "sb", 2),
            SearchResult("https://c", "C", "sc", 3),
        ]

    def test_scripted_query_returns_fixture(self):
        stub = ScriptedSearchStub({"q": self.fixture_results()})
        assert [r.url for r in stub.search("q", 10)] == ["https://a", "https://b", "https://c"]

    def test_lenient_mode_empty_for_unknown_query(self):
        stub = ScriptedSearchStub({}, strict=False)
        assert stub.search("nothing", 5) == []

    def test_strict_mode_raises(self):
        stub = ScriptedSearchStub({}, strict=True)
        with pytest.raises(StubMiss):
            stub.search("nothing", 5)

    def test_max_results_truncates_to_rank_one(self):
        stub = ScriptedSearchStub({"q": self.fixture_results()})
        out = stub.search("q", 1)
        assert len(out) == 1
        assert out[0].rank == 1


class TestGateway:
    def test_rejects_empty_inputs(self, gateway):
        with pytest.raises(EmptyText):
            gateway.complete(CompletionRequest("", "x"))
        with pytest.raises(EmptyText):
            gateway.embed("  ")
        with pytest.raises(EmptyQuery):
            gateway.search("")

    def test_embedding_dim_pinned_for_process_lifetime(self):
        gw = make_gateway(dim=16)
        gw.embed("a")
        assert gw.embedding_dim == 16

        class WrongDim:
            name = "bad"

            def embed(self, text):
                return np.ones(8)

        gw.embedder = WrongDim()
        with pytest.raises(ProviderUnavailable):
            gw.embed("b")

    def test_call_log_records_every_call(self, gateway):
        gateway.embed("a", context="p1")
        gateway.search("b", 3, context="p1")
        gateway.complete(
            CompletionRequest("s", "BASE: a\nCOMPARED: a", response_schema_tag="verdict"),
            context="p2",
        )
        log = gateway.call_log
        assert log.count() == 3
        assert log.count(kind="embed", context="p1") == 1
        assert log.count(kind="search", context="p1") == 1
        assert log.count(kind="complete", context="p2") == 1
        assert all(e.ok for e in log.entries())

    def test_failed_call_logged_with_ok_false(self, gateway):
        gateway.chat = ScriptedChatStub()
        with pytest.raises(StubMiss):
            gateway.complete(CompletionRequest("s", "u", response_schema_tag="x"))
        entries = gateway.call_log.entries()
        assert entries[-1].kind == "complete"
        assert not entries[-1].ok


class TestLiveAdapters:
    def test_chat_unreachable_after_retries(self, monkeypatch):
        monkeypatch.setenv("SKUMAP_CHAT_API_KEY", "test-key")
        attempts = []

        def handler(request):
            attempts.append(1)
            raise httpx.ConnectError("down")

        client = httpx.Client(transport=httpx.MockTransport(handler))
        adapter = OpenAIChatAdapter(client=client, retries=3, backoff_s=0)
        with pytest.raises(ProviderUnavailable):
            adapter.complete(CompletionRequest("s", "u"))
        assert len(attempts) == 3

    def test_chat_non_retryable_raises_refused(self, monkeypatch):
        monkeypatch.setenv("SKUMAP_CHAT_API_KEY", "test-key")

        def handler(request):
            return httpx.Response(401, text="no")

        client = httpx.Client(transport=httpx.MockTransport(handler))
        adapter = OpenAIChatAdapter(client=client, retries=3, backoff_s=0)
        with pytest.raises(ProviderRefused):
            adapter.complete(CompletionRequest("s", "u"))

    def test_chat_missing_credentials(self, monkeypatch):
        monkeypatch.delenv("SKUMAP_CHAT_API_KEY", raising=False)
        adapter = OpenAIChatAdapter(client=httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200))))
        with pytest.raises(ProviderRefused):
            adapter.complete(CompletionRequest("s", "u"))

    def test_search_adapter_parses_results(self):
        def handler(request):
            return httpx.Response(
                200,
                json=[
                    {"url": "https://a", "title": "A", "snippet": "sa"},
                    {"url": "https://b", "title": "B", "snippet": "sb"},
                ],
            )

        client = httpx.Client(transport=httpx.MockTransport(handler))
        adapter = HttpSearchAdapter("https://search.example/api", client=client)
        out = adapter.search("query", 2)
        assert [r.rank for r in out] == [1, 2]
        assert out[0].url == "https://a"


class TestHeuristicChatStub:
    def test_pure_function_of_prompts(self):
        stub = HeuristicChatStub()
        r = CompletionRequest(
            "s", "BASE: coke 1l\nCOMPARED: pepsi 2l", response_schema_tag="question_generation"
        )
        assert stub.complete(r) == stub.complete(r)

    def test_identical_titles_yield_no_questions(self):
        stub = HeuristicChatStub()
        r = CompletionRequest(
            "s", "BASE: same thing\nCOMPARED: same thing", response_schema_tag="question_generation"
        )
        assert stub.complete(r) == "NO_QUESTIONS"
