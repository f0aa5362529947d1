"""LLM-backed reasoning roles: question generation, evidence synthesis,
verdict synthesis, plus the strict parsers for their structured output.

Provider output is parsed under a fenced key-value / tagged-line grammar and
rejected on any deviation — no silent repair, since repaired output would
flow into the persistent trace store.
"""

from __future__ import annotations

import re
from importlib import resources
from typing import Optional

from .core import (
    DimensionStatus,
    DisambiguationQuestion,
    EvidenceAnswer,
    EvidenceSet,
    MatchDimension,
    MatchVerdict,
    ProductPair,
    Provenance,
    QuestionSet,
    ResolvedBy,
    VerdictLabel,
)
from .errors import MalformedProviderOutput, NoEvidenceFound
from .providers import CompletionRequest, ProviderGateway

# What each dimension is responsible for when generating questions; injected
# into the question-generation and verdict prompts so the taxonomy lives in
# one place.
DIMENSION_GUIDE = {
    MatchDimension.BRAND: "the manufacturer, label, or maker must be consistent across both listings",
    MatchDimension.CORE_PRODUCT_NAME: "whether the names are synonyms or distinct product lines",
    MatchDimension.VARIANT: "options such as flavor, color, or finish",
    MatchDimension.SPECIFICATION: "size, weight, volume, or technical details",
    MatchDimension.QUANTITY: "pack size, unit count, or bundle configuration",
}


def _dimension_guide_block() -> str:
    return "\n".join(f"- {dim.value}: {role}" for dim, role in DIMENSION_GUIDE.items())


def _template(name: str) -> str:
    return resources.files("skumap.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")


# --- strict output parsers --------------------------------------------------

_QUESTION_LINE = re.compile(
    r"^\[(Brand|CoreProductName|Variant|Specification|Quantity)\]\s+(\S.*)$"
)

VERDICT_KEYS = (
    "label",
    "confidence",
    "brand",
    "core_product_name",
    "variant",
    "specification",
    "quantity",
    "rationale",
)

_STATUS_KEY_TO_DIM = {
    "brand": MatchDimension.BRAND,
    "core_product_name": MatchDimension.CORE_PRODUCT_NAME,
    "variant": MatchDimension.VARIANT,
    "specification": MatchDimension.SPECIFICATION,
    "quantity": MatchDimension.QUANTITY,
}


def parse_question_lines(text: str) -> list[tuple[MatchDimension, str]]:
    """Parse '[Dimension] question' lines; 'NO_QUESTIONS' means an empty set."""
    stripped = text.strip()
    if stripped == "NO_QUESTIONS":
        return []
    out = []
    for line in stripped.splitlines():
        if not line.strip():
            continue
        m = _QUESTION_LINE.match(line.strip())
        if not m:
            raise MalformedProviderOutput(f"bad question line: {line!r}")
        out.append((MatchDimension(m.group(1)), m.group(2)))
    if not out:
        raise MalformedProviderOutput("question output was empty without NO_QUESTIONS")
    return out


def _parse_kv_lines(text: str, allowed: tuple[str, ...]) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in text.strip().splitlines():
        if not line.strip():
            continue
        if ":" not in line:
            raise MalformedProviderOutput(f"expected 'key: value', got {line!r}")
        key, _, value = line.partition(":")
        key = key.strip()
        if key not in allowed:
            raise MalformedProviderOutput(f"unknown key {key!r}")
        if key in out:
            raise MalformedProviderOutput(f"duplicate key {key!r}")
        out[key] = value.strip()
    return out


def parse_verdict_text(text: str, provenance: Provenance) -> MatchVerdict:
    fields = _parse_kv_lines(text, VERDICT_KEYS)
    missing = [k for k in VERDICT_KEYS if k not in fields]
    if missing:
        raise MalformedProviderOutput(f"verdict missing keys: {missing}")
    try:
        label = VerdictLabel(fields["label"])
    except ValueError:
        raise MalformedProviderOutput(f"bad label {fields['label']!r}") from None
    try:
        confidence = float(fields["confidence"])
    except ValueError:
        raise MalformedProviderOutput(f"bad confidence {fields['confidence']!r}") from None
    if not (0.0 <= confidence <= 1.0):
        raise MalformedProviderOutput(f"confidence {confidence} outside [0,1]")
    status = {}
    for key, dim in _STATUS_KEY_TO_DIM.items():
        try:
            status[dim] = DimensionStatus(fields[key])
        except ValueError:
            raise MalformedProviderOutput(f"bad status {fields[key]!r} for {key}") from None
    if not fields["rationale"]:
        raise MalformedProviderOutput("rationale must be non-empty")
    return MatchVerdict(label, status, confidence, fields["rationale"], provenance)


def parse_sufficiency_text(text: str) -> tuple[bool, str]:
    fields = _parse_kv_lines(text, ("decision", "reason"))
    decision = fields.get("decision")
    if decision not in ("sufficient", "insufficient"):
        raise MalformedProviderOutput(f"bad sufficiency decision {decision!r}")
    return decision == "sufficient", fields.get("reason", "")


# --- agent operations -------------------------------------------------------

def generate_questions(
    gateway: ProviderGateway, pair: ProductPair, context: Optional[str] = None
) -> QuestionSet:
    """Ask the provider which attributes are ambiguous for this pair.

    The provider decides how many questions to ask (zero is legal);
    malformed output is rejected, never repaired.
    """
    system = _template("question_generation").format(dimension_guide=_dimension_guide_block())
    user = _template("question_generation_user").format(
        base_title=pair.base_title, compared_title=pair.compared_title
    )
    raw = gateway.complete(
        CompletionRequest(system, user, response_schema_tag="question_generation"),
        context=context,
    )
    questions = tuple(
        DisambiguationQuestion(
            question_id=f"{pair.pair_id}-q{i}",
            pair_id=pair.pair_id,
            text=text,
            dimension=dim,
        )
        for i, (dim, text) in enumerate(parse_question_lines(raw), start=1)
    )
    return QuestionSet(pair.pair_id, questions)


def answer_question(
    gateway: ProviderGateway,
    question: DisambiguationQuestion,
    pair: ProductPair,
    max_results: int = 5,
    context: Optional[str] = None,
) -> EvidenceAnswer:
    """Resolve one question with a focused web search plus one completion.

    The search query is the question text concatenated with both titles.
    Raises NoEvidenceFound when the search comes back empty.
    """
    query = f"{question.text} {pair.base_title} {pair.compared_title}"
    results = gateway.search(query, max_results=max_results, context=context)
    if not results:
        raise NoEvidenceFound(f"no search results for question {question.question_id}")
    search_block = "\n".join(f"[{r.rank}] {r.url}\n{r.snippet}" for r in results)
    user = _template("evidence_answer_user").format(
        base_title=pair.base_title,
        compared_title=pair.compared_title,
        question_text=question.text,
        search_block=search_block,
    )
    raw = gateway.complete(
        CompletionRequest(_template("evidence_answer"), user, response_schema_tag="evidence_answer"),
        context=context,
    )
    if not raw.strip():
        raise MalformedProviderOutput("evidence answer was empty")
    return EvidenceAnswer(
        question_id=question.question_id,
        answer_text=raw.strip(),
        sources=tuple((r.url, r.snippet) for r in results),
        resolved_by=ResolvedBy.FRESH_SEARCH,
    )


def synthesize_verdict(
    gateway: ProviderGateway,
    pair: ProductPair,
    evidence: EvidenceSet,
    provenance: Provenance,
    exemplars: Optional[list[tuple[str, str, int]]] = None,
    context_snippets: Optional[list[str]] = None,
    context: Optional[str] = None,
) -> MatchVerdict:
    """One completion call producing the structured verdict.

    Empty evidence means direct judgment from the titles alone (optionally
    grounded by raw ``context_snippets``, as in unstructured web-search
    mode). Few-shot exemplars, when given, are injected verbatim as labeled
    examples.
    """
    if evidence.answers:
        evidence_block = "\n".join(
            f"- ({a.question_id}) {a.answer_text}" for a in evidence.answers
        )
    elif context_snippets:
        evidence_block = "\n".join(f"- {s}" for s in context_snippets)
    else:
        evidence_block = "No external evidence; judge from the titles alone."
    exemplar_block = ""
    if exemplars:
        lines = ["LABELED EXAMPLES:"]
        for base, compared, label in exemplars:
            word = "Equivalent" if label == 1 else "NonEquivalent"
            lines.append(f"- {base} || {compared} => {word}")
        exemplar_block = "\n".join(lines) + "\n\n"
    system = _template("verdict").format(dimension_guide=_dimension_guide_block())
    user = _template("verdict_user").format(
        base_title=pair.base_title,
        compared_title=pair.compared_title,
        exemplar_block=exemplar_block,
        evidence_block=evidence_block,
    )
    raw = gateway.complete(
        CompletionRequest(system, user, response_schema_tag="verdict"), context=context
    )
    return parse_verdict_text(raw, provenance)
