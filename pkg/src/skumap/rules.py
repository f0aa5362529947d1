"""Deterministic rule-based matcher.

Three sequential stages: (1) title normalization (lowercase, strip
punctuation, drop stopwords, canonicalize units), (2) brand detection against
a curated dictionary, (3) quantity extraction and alignment. Two titles are
judged equivalent only when core tokens, brand, and extracted quantities all
match; a missing brand on either side forces non-equivalence.

All functions are pure over immutable configs and safe for parallel use.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Optional

from .core import (
    DimensionStatus,
    MatchDimension,
    MatchVerdict,
    ProductPair,
    Provenance,
    VerdictLabel,
)
from .errors import EmptyTitle

QUANTITY_KINDS = ("count", "mass", "volume", "length", "dosage", "multiplier", "duration")

_NUMBER_TOKEN = re.compile(r"^(\d+(?:\.\d+)?)([a-z]+)?$")


@dataclass(frozen=True)
class UnitRule:
    canonical: str
    kind: str
    scale: Decimal


@dataclass(frozen=True)
class NormalizationConfig:
    stopwords: frozenset[str]
    unit_canonical_map: dict[str, UnitRule]
    multiplier_markers: frozenset[str]

    def __post_init__(self):
        if not self.multiplier_markers:
            raise ValueError("multiplier_markers must be non-empty")
        for surface in self.unit_canonical_map:
            if surface != surface.lower():
                raise ValueError(f"unit surface {surface!r} must be lowercase")


@dataclass(frozen=True)
class BrandDictionary:
    """Curated brand names, each a lowercase token sequence."""

    entries: frozenset[tuple[str, ...]]

    def __post_init__(self):
        for entry in self.entries:
            if not entry:
                raise ValueError("brand entries must be non-empty")


@dataclass(frozen=True)
class QuantitySpec:
    """One extracted quantity in canonical units."""

    value: Decimal
    unit: str
    kind: str

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("quantity value must be positive")
        if self.kind not in QUANTITY_KINDS:
            raise ValueError(f"unknown quantity kind {self.kind!r}")

    def render(self) -> str:
        """Canonical surface form that re-parses to this spec."""
        v = format(self.value.normalize(), "f")
        if self.kind == "multiplier":
            return f"× {v}"
        return f"{v}{self.unit}"


@dataclass(frozen=True)
class NormalizedTitle:
    core_tokens: tuple[str, ...]
    brand: Optional[tuple[str, ...]]
    quantities: tuple[QuantitySpec, ...]  # sorted; compared as a multiset

    def reconstruct(self) -> str:
        """A canonical string that normalizes back to this exact value.

        Requires the config's unit map to list each canonical unit as its own
        surface form (true for the shipped defaults).
        """
        parts = list(self.brand or ()) + list(self.core_tokens)
        parts += [q.render() for q in self.quantities]
        return " ".join(parts)


def _sort_quantities(qs: list[QuantitySpec]) -> tuple[QuantitySpec, ...]:
    return tuple(sorted(qs, key=lambda q: (q.kind, q.unit, q.value)))


# --- config loading ---------------------------------------------------------

def _data_text(name: str) -> str:
    return resources.files("skumap.data").joinpath(name).read_text(encoding="utf-8")


def load_unit_map(text: str) -> dict[str, UnitRule]:
    """Parse 'surface<TAB>canonical<TAB>kind<TAB>scale' lines."""
    out: dict[str, UnitRule] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        surface, canonical, kind, scale = line.split("\t")
        out[surface] = UnitRule(canonical, kind, Decimal(scale))
    return out


def default_normalization_config(
    stopwords_path: Optional[str | Path] = None,
    units_path: Optional[str | Path] = None,
    multiplier_markers: Optional[set[str]] = None,
) -> NormalizationConfig:
    if stopwords_path is None:
        sw_text = _data_text("stopwords.txt")
    else:
        sw_text = Path(stopwords_path).read_text(encoding="utf-8")
    if units_path is None:
        unit_text = _data_text("units.tsv")
    else:
        unit_text = Path(units_path).read_text(encoding="utf-8")
    stopwords = frozenset(w.strip().lower() for w in sw_text.splitlines() if w.strip())
    markers = frozenset(multiplier_markers or {"×", "x", "*"})
    return NormalizationConfig(stopwords, load_unit_map(unit_text), markers)


def load_brand_dictionary(path: Optional[str | Path] = None) -> BrandDictionary:
    """One brand per line; multi-token brands allowed."""
    text = _data_text("brands.txt") if path is None else Path(path).read_text(encoding="utf-8")
    entries = set()
    for line in text.splitlines():
        tokens = tuple(line.strip().lower().split())
        if tokens:
            entries.add(tokens)
    return BrandDictionary(frozenset(entries))


# --- stage 1: normalization -------------------------------------------------

def _tokenize(raw: str, cfg: NormalizationConfig) -> list[str]:
    t = raw.lower()
    symbol_markers = [m for m in cfg.multiplier_markers if not m.isalnum()]
    for m in symbol_markers:
        t = t.replace(m, f" {m} ")
    # split alphanumeric markers glued to digits ("120x3", "x3", "3x")
    for m in cfg.multiplier_markers:
        if m.isalnum():
            esc = re.escape(m)
            t = re.sub(rf"(?<=\d){esc}(?=\d)", f" {m} ", t)
            t = re.sub(rf"\b{esc}(?=\d)", f"{m} ", t)
            t = re.sub(rf"(?<=\d){esc}\b", f" {m}", t)
    keep = re.escape("".join(symbol_markers))
    t = re.sub(rf"[^\w.\s{keep}]+", " ", t)
    tokens = []
    for tok in t.split():
        tok = tok.strip(".")
        if tok and tok != "_":
            tokens.append(tok)
    return tokens


def _extract_quantities(
    tokens: list[str], cfg: NormalizationConfig
) -> tuple[list[str], list[QuantitySpec]]:
    n = len(tokens)
    consumed = [False] * n
    quantities: list[QuantitySpec] = []

    def is_pure_number(i: int) -> bool:
        if i < 0 or i >= n:
            return False
        m = _NUMBER_TOKEN.match(tokens[i])
        return bool(m and m.group(2) is None)

    # markers count only when adjacent to a number
    for i, tok in enumerate(tokens):
        if tok in cfg.multiplier_markers and (is_pure_number(i - 1) or is_pure_number(i + 1)):
            consumed[i] = True

    for i, tok in enumerate(tokens):
        if consumed[i]:
            continue
        m = _NUMBER_TOKEN.match(tok)
        if not m:
            continue
        value = Decimal(m.group(1))
        suffix = m.group(2)
        if suffix is not None:
            rule = cfg.unit_canonical_map.get(suffix)
            if rule is not None:
                quantities.append(QuantitySpec(value * rule.scale, rule.canonical, rule.kind))
                consumed[i] = True
            continue  # unknown suffix: leave token in the core stream
        nxt = tokens[i + 1] if i + 1 < n else None
        if nxt is not None and not consumed[i + 1] and nxt in cfg.unit_canonical_map:
            rule = cfg.unit_canonical_map[nxt]
            quantities.append(QuantitySpec(value * rule.scale, rule.canonical, rule.kind))
            consumed[i] = consumed[i + 1] = True
            continue
        prev_marker = i - 1 >= 0 and tokens[i - 1] in cfg.multiplier_markers
        next_marker = i + 1 < n and tokens[i + 1] in cfg.multiplier_markers
        if prev_marker or next_marker:
            quantities.append(QuantitySpec(value, "x", "multiplier"))
        else:
            quantities.append(QuantitySpec(value, "ea", "count"))
        consumed[i] = True

    rest = [tok for i, tok in enumerate(tokens) if not consumed[i]]
    return rest, quantities


def _detect_brand(
    tokens: list[str], dictionary: BrandDictionary
) -> tuple[list[str], Optional[tuple[str, ...]]]:
    """Longest contiguous dictionary match anywhere in the token stream."""
    best: Optional[tuple[int, tuple[str, ...]]] = None  # (start, entry)
    for entry in dictionary.entries:
        width = len(entry)
        for start in range(len(tokens) - width + 1):
            if tuple(tokens[start : start + width]) == entry:
                if best is None or width > len(best[1]) or (
                    width == len(best[1]) and start < best[0]
                ):
                    best = (start, entry)
                break
    if best is None:
        return tokens, None
    start, entry = best
    rest = tokens[:start] + tokens[start + len(entry) :]
    return rest, entry


def normalize_title(
    raw: str, cfg: NormalizationConfig, dictionary: BrandDictionary
) -> NormalizedTitle:
    """Run all stage-1 rules on a raw listing title.

    Idempotent at token level: normalizing ``NormalizedTitle.reconstruct()``
    with the same config and dictionary yields an equal value.
    """
    if not raw or not raw.strip():
        raise EmptyTitle("cannot normalize an empty title")
    tokens = _tokenize(raw, cfg)
    tokens, quantities = _extract_quantities(tokens, cfg)
    tokens, brand = _detect_brand(tokens, dictionary)
    core = tuple(t for t in tokens if t not in cfg.stopwords)
    return NormalizedTitle(core, brand, _sort_quantities(quantities))


# --- stages 2 and 3 ---------------------------------------------------------

BRAND_MATCH = "Match"
BRAND_MISMATCH = "Mismatch"
BRAND_ABSENT = "Absent"


def match_brand(a: NormalizedTitle, b: NormalizedTitle) -> str:
    """Match iff both brands present and equal; Absent if either is missing."""
    if a.brand is None or b.brand is None:
        return BRAND_ABSENT
    return BRAND_MATCH if a.brand == b.brand else BRAND_MISMATCH


def align_quantities(a: NormalizedTitle, b: NormalizedTitle) -> bool:
    """True iff the canonicalized quantity multisets are equal."""
    return Counter(a.quantities) == Counter(b.quantities)


def rule_verdict(
    pair: ProductPair, cfg: NormalizationConfig, dictionary: BrandDictionary
) -> MatchVerdict:
    """Equivalent only when core tokens, brand, and quantities all match.

    An absent brand on either side yields NonEquivalent (the dictionary
    heuristic is strict by design, which explains its high false-negative
    rate on unknown brands).
    """
    a = normalize_title(pair.base_title, cfg, dictionary)
    b = normalize_title(pair.compared_title, cfg, dictionary)

    brand_outcome = match_brand(a, b)
    core_equal = set(a.core_tokens) == set(b.core_tokens)
    quantities_equal = align_quantities(a, b)

    equivalent = core_equal and brand_outcome == BRAND_MATCH and quantities_equal
    core_status = DimensionStatus.MATCH if core_equal else DimensionStatus.MISMATCH
    status = {
        MatchDimension.BRAND: {
            BRAND_MATCH: DimensionStatus.MATCH,
            BRAND_MISMATCH: DimensionStatus.MISMATCH,
            BRAND_ABSENT: DimensionStatus.UNKNOWN,
        }[brand_outcome],
        MatchDimension.CORE_PRODUCT_NAME: core_status,
        MatchDimension.VARIANT: core_status,
        MatchDimension.SPECIFICATION: DimensionStatus.UNKNOWN,
        MatchDimension.QUANTITY: (
            DimensionStatus.MATCH if quantities_equal else DimensionStatus.MISMATCH
        ),
    }
    reasons = [
        f"brand: {brand_outcome.lower()}",
        f"core tokens: {'match' if core_equal else 'differ'}",
        f"quantities: {'aligned' if quantities_equal else 'differ'}",
    ]
    return MatchVerdict(
        label=VerdictLabel.EQUIVALENT if equivalent else VerdictLabel.NON_EQUIVALENT,
        dimension_status=status,
        confidence=1.0,
        rationale="; ".join(reasons),
        provenance=Provenance.RULE,
    )
