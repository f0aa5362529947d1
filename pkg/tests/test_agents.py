import pytest
from hypothesis import given
from hypothesis import strategies as st

from skumap.agents import (
    answer_question,
    generate_questions,
    parse_question_lines,
    parse_sufficiency_text,
    parse_verdict_text,
    synthesize_verdict,
)
from skumap.core import (
    DimensionStatus,
    DisambiguationQuestion,
    EvidenceAnswer,
    EvidenceSet,
    MatchDimension,
    Provenance,
    ResolvedBy,
    VerdictLabel,
    new_pair,
)
from skumap.errors import MalformedProviderOutput, NoEvidenceFound
from skumap.providers.stubs import ScriptedChatStub, ScriptedSearchStub

from conftest import RecordingChat, make_gateway


GOOD_VERDICT = (
    "label: Equivalent\n"
    "confidence: 0.9\n"
    "brand: Match\n"
    "core_product_name: Match\n"
    "variant: Unknown\n"
    "specification: Match\n"
    "quantity: Match\n"
    "rationale: all checked attributes line up\n"
)


class TestQuestionParser:
    def test_parses_tagged_lines(self):
        text = "[Brand] Are these the same maker?\n[Quantity] Same pack size?"
        out = parse_question_lines(text)
        assert out == [
            (MatchDimension.BRAND, "Are these the same maker?"),
            (MatchDimension.QUANTITY, "Same pack size?"),
        ]

    def test_no_questions_sentinel(self):
        assert parse_question_lines("NO_QUESTIONS") == []
        assert parse_question_lines("  NO_QUESTIONS\n") == []

    @pytest.mark.parametrize(
        "bad",
        [
            "",
            "Are these the same maker?",
            "[Color] wrong dimension?",
            "[Brand]",
            "- [Brand] bulleted line",
        ],
    )
    def test_rejects_malformed(self, bad):
        with pytest.raises(MalformedProviderOutput):
            parse_question_lines(bad)


class TestVerdictParser:
    def test_parses_well_formed(self):
        v = parse_verdict_text(GOOD_VERDICT, Provenance.ZERO_SHOT)
        assert v.label is VerdictLabel.EQUIVALENT
        assert v.confidence == 0.9
        assert v.provenance is Provenance.ZERO_SHOT
        assert v.dimension_status[MatchDimension.VARIANT] is DimensionStatus.UNKNOWN

    def test_rejects_missing_key(self):
        text = GOOD_VERDICT.replace("quantity: Match\n", "")
        with pytest.raises(MalformedProviderOutput):
            parse_verdict_text(text, Provenance.ZERO_SHOT)

    def test_rejects_duplicate_key(self):
        with pytest.raises(MalformedProviderOutput):
            parse_verdict_text(GOOD_VERDICT + "label: Equivalent\n", Provenance.ZERO_SHOT)

    def test_rejects_unknown_key(self):
        with pytest.raises(MalformedProviderOutput):
            parse_verdict_text(GOOD_VERDICT + "extra: field\n", Provenance.ZERO_SHOT)

    def test_rejects_bad_label(self):
        with pytest.raises(MalformedProviderOutput):
            parse_verdict_text(GOOD_VERDICT.replace("Equivalent", "Same", 1), Provenance.ZERO_SHOT)

    @pytest.mark.parametrize("conf", ["1.5", "-0.1", "high"])
    def test_rejects_out_of_range_confidence(self, conf):
        with pytest.raises(MalformedProviderOutput):
            parse_verdict_text(
                GOOD_VERDICT.replace("confidence: 0.9", f"confidence: {conf}"),
                Provenance.ZERO_SHOT,
            )

    def test_rejects_prose_preamble(self):
        with pytest.raises(MalformedProviderOutput):
            parse_verdict_text("Sure, here is the verdict\n" + GOOD_VERDICT, Provenance.ZERO_SHOT)

    @given(conf=st.floats(min_value=0, max_value=1, allow_nan=False))
    def test_round_trips_any_valid_confidence(self, conf):
        text = GOOD_VERDICT.replace("confidence: 0.9", f"confidence: {conf!r}")
        v = parse_verdict_text(text, Provenance.Q2K_FRESH)
        assert v.confidence == conf


class TestSufficiencyParser:
    def test_parses_both_decisions(self):
        assert parse_sufficiency_text("decision: sufficient\nreason: same facts") == (
            True,
            "same facts",
        )
        assert parse_sufficiency_text("decision: insufficient\nreason: new attribute") == (
            False,
            "new attribute",
        )

    @pytest.mark.parametrize("bad", ["decision: maybe\nreason: r", "reason: r", "yes"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(MalformedProviderOutput):
            parse_sufficiency_text(bad)


class TestGenerateQuestions:
    def test_question_ids_derive_from_pair(self):
        pair = new_pair("coke zero 1l", "pepsi max 2l", pair_id="p-77")
        qs = generate_questions(make_gateway(), pair)
        assert qs.pair_id == "p-77"
        assert [q.question_id for q in qs.questions] == [
            f"p-77-q{i}" for i in range(1, len(qs.questions) + 1)
        ]
        assert all(q.pair_id == "p-77" for q in qs.questions)

    def test_identical_titles_give_empty_set(self):
        pair = new_pair("same product 1l", "same product 1l")
        assert generate_questions(make_gateway(), pair).questions == ()

    def test_prompt_carries_both_titles(self):
        chat = RecordingChat(ScriptedChatStub(by_tag={"question_generation": ["NO_QUESTIONS"]}))
        pair = new_pair("Base Title X", "Compared Title Y")
        generate_questions(make_gateway(chat=chat), pair)
        prompt = chat.requests[0].user_prompt
        assert "Base Title X" in prompt
        assert "Compared Title Y" in prompt

    def test_malformed_output_propagates(self):
        chat = ScriptedChatStub(by_tag={"question_generation": ["free-form chatter"]})
        with pytest.raises(MalformedProviderOutput):
            generate_questions(make_gateway(chat=chat), new_pair("a", "b"))


class TestAnswerQuestion:
    def question(self, pair):
        return DisambiguationQuestion(f"{pair.pair_id}-q1", pair.pair_id, "Same maker?", MatchDimension.BRAND)

    def test_answer_carries_sources(self):
        pair = new_pair("coke zero 1l", "pepsi max 2l")
        ans = answer_question(make_gateway(), self.question(pair), pair)
        assert ans.resolved_by is ResolvedBy.FRESH_SEARCH
        assert ans.sources
        assert ans.answer_text

    def test_empty_search_raises_no_evidence(self):
        pair = new_pair("coke zero 1l", "pepsi max 2l")
        gw = make_gateway(searcher=ScriptedSearchStub({}, strict=False))
        with pytest.raises(NoEvidenceFound):
            answer_question(gw, self.question(pair), pair)

    def test_query_includes_question_and_titles(self):
        pair = new_pair("coke zero 1l", "pepsi max 2l")
        queries = []

        class RecordingSearch:
            name = "search-recording"

            def __init__(self, inner):
                self.inner = inner

            def search(self, query, max_results):
                queries.append(query)
                return self.inner.search(query, max_results)

        from skumap.providers.stubs import HeuristicSearchStub

        gw = make_gateway(searcher=RecordingSearch(HeuristicSearchStub()))
        answer_question(gw, self.question(pair), pair, context="ctx")
        assert "Same maker?" in queries[0]
        assert "coke zero 1l" in queries[0]


class TestSynthesizeVerdict:
    def test_direct_judgment_without_evidence(self):
        pair = new_pair("coke zero 1l", "coke zero 1l")
        v = synthesize_verdict(
            make_gateway(), pair, EvidenceSet(pair.pair_id, ()), Provenance.ZERO_SHOT
        )
        assert v.provenance is Provenance.ZERO_SHOT
        assert v.label is VerdictLabel.EQUIVALENT

    def test_exemplars_injected_into_prompt(self):
        chat = RecordingChat(ScriptedChatStub(by_tag={"verdict": [GOOD_VERDICT]}))
        pair = new_pair("a thing", "b thing")
        synthesize_verdict(
            make_gateway(chat=chat),
            pair,
            EvidenceSet(pair.pair_id, ()),
            Provenance.FEW_SHOT,
            exemplars=[("x one", "x two", 1)],
        )
        assert "x one || x two => Equivalent" in chat.requests[0].user_prompt

    def test_evidence_answers_injected_into_prompt(self):
        chat = RecordingChat(ScriptedChatStub(by_tag={"verdict": [GOOD_VERDICT]}))
        pair = new_pair("a thing", "b thing")
        ans = EvidenceAnswer("q1", "both list the same manufacturer", (), ResolvedBy.REUSED_TRACE)
        synthesize_verdict(
            make_gateway(chat=chat),
            pair,
            EvidenceSet(pair.pair_id, (ans,)),
            Provenance.Q2K_REUSED,
        )
        assert "both list the same manufacturer" in chat.requests[0].user_prompt

    def test_context_snippets_used_when_no_answers(self):
        chat = RecordingChat(ScriptedChatStub(by_tag={"verdict": [GOOD_VERDICT]}))
        pair = new_pair("a thing", "b thing")
        synthesize_verdict(
            make_gateway(chat=chat),
            pair,
            EvidenceSet(pair.pair_id, ()),
            Provenance.WEB_SEARCH,
            context_snippets=["snippet from the open web"],
        )
        assert "snippet from the open web" in chat.requests[0].user_prompt
