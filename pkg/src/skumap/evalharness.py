"""Dataset ingestion, accuracy computation, ablation statistics, and report
emission.

Datasets are UTF-8 delimiter-separated files (tab by default, so commas
inside product titles survive) with a header row and columns base_product,
compared_product, label. Accuracy is computed in exact rational arithmetic
and rendered with four decimal places.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import (
    BadLabel,
    EmptyInput,
    EmptyTitleRow,
    FileUnreadable,
    FileUnwritable,
    LengthMismatch,
    MissingColumn,
)
from .pipeline import RunLog

REQUIRED_COLUMNS = ("base_product", "compared_product", "label")

MODE_DISPLAY_NAMES = {
    "rule": "Rule-Based Matching",
    "zero_shot": "Zero-Shot Inference",
    "few_shot": "Few-Shot Inference",
    "web_search": "Web Search Inference",
    "q2k": "Q2K Mapping",
}


@dataclass(frozen=True)
class DatasetRecord:
    base_product: str
    compared_product: str
    label: int  # 1 = equivalent

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


def load_dataset(path: str | Path, delimiter: str = "\t") -> list[DatasetRecord]:
    """One DatasetRecord per row; rejects bad rows with their row number."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read dataset {path}") from exc
    reader = csv.DictReader(text.splitlines(), delimiter=delimiter)
    fields = reader.fieldnames or []
    for col in REQUIRED_COLUMNS:
        if col not in fields:
            raise MissingColumn(f"dataset lacks required column {col!r}")
    records = []
    for rownum, row in enumerate(reader, start=2):  # header is row 1
        base = (row["base_product"] or "").strip()
        compared = (row["compared_product"] or "").strip()
        if not base:
            raise EmptyTitleRow(rownum, "base_product")
        if not compared:
            raise EmptyTitleRow(rownum, "compared_product")
        raw_label = (row["label"] or "").strip()
        if raw_label not in ("0", "1"):
            raise BadLabel(rownum, raw_label)
        records.append(DatasetRecord(base, compared, int(raw_label)))
    return records


def write_dataset(records: list[DatasetRecord], path: str | Path, delimiter: str = "\t") -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            writer.writerow(REQUIRED_COLUMNS)
            for r in records:
                writer.writerow([r.base_product, r.compared_product, r.label])
    except OSError as exc:
        raise FileUnwritable(f"cannot write dataset {path}") from exc


def accuracy(preds: list[int], labels: list[int]) -> Fraction:
    """Mean of the agreement indicator, as an exact fraction."""
    if len(preds) != len(labels):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(labels)} labels")
    if not preds:
        raise EmptyInput("accuracy requires at least one prediction")
    correct = sum(1 for p, y in zip(preds, labels) if p == y)
    return Fraction(correct, len(preds))


@dataclass(frozen=True)
class EvalReport:
    mode: str
    n_pairs: int
    correct: int
    avg_questions_per_pair: Fraction
    dedup_activation_rate: Fraction
    total_web_queries: int
    total_completion_calls: int
    failures: int

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.correct, self.n_pairs)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_pairs": self.n_pairs,
            "correct": self.correct,
            "accuracy": f"{float(self.accuracy):.4f}",
            "avg_questions_per_pair": f"{float(self.avg_questions_per_pair):.4f}",
            "dedup_activation_rate": f"{float(self.dedup_activation_rate):.4f}",
            "total_web_queries": self.total_web_queries,
            "total_completion_calls": self.total_completion_calls,
            "failures": self.failures,
        }


def ablation_stats(log: RunLog) -> dict[str, Fraction | int]:
    """Exact batch statistics from a run log (counts first, one division)."""
    if not len(log):
        raise EmptyInput("run log is empty")
    n = len(log)
    total_questions = sum(r.questions_generated for r in log)
    dedup_count = sum(1 for r in log if r.dedup_activated)
    return {
        "avg_questions_per_pair": Fraction(total_questions, n),
        "dedup_activation_rate": Fraction(dedup_count, n),
        "total_web_queries": sum(r.web_queries_issued for r in log),
        "total_completion_calls": sum(r.completion_calls for r in log),
        "failures": sum(1 for r in log if r.failed),
    }


def build_report(mode: str, log: RunLog, labels: list[int]) -> EvalReport:
    """Combine Eq.-style accuracy with the ablation statistics of one run."""
    records = list(log)
    if len(records) != len(labels):
        raise LengthMismatch(f"{len(records)} records vs {len(labels)} labels")
    preds = [
        1 if r.verdict_label == "Equivalent" else 0
        for r in records
    ]
    correct = sum(1 for p, y in zip(preds, labels) if p == y)
    stats = ablation_stats(log)
    return EvalReport(
        mode=mode,
        n_pairs=len(records),
        correct=correct,
        avg_questions_per_pair=stats["avg_questions_per_pair"],
        dedup_activation_rate=stats["dedup_activation_rate"],
        total_web_queries=stats["total_web_queries"],
        total_completion_calls=stats["total_completion_calls"],
        failures=stats["failures"],
    )


def render_report_table(report: EvalReport) -> str:
    name = MODE_DISPLAY_NAMES.get(report.mode, report.mode)
    lines = [
        "Method                      | Accuracy",
        "----------------------------+---------",
        f"{name:<28}| {float(report.accuracy):.4f}",
        "",
        f"pairs evaluated:            {report.n_pairs}",
        f"avg questions per pair:     {float(report.avg_questions_per_pair):.4f}",
        f"dedup activation rate:      {float(report.dedup_activation_rate):.4f}",
        f"total web queries:          {report.total_web_queries}",
        f"total completion calls:     {report.total_completion_calls}",
        f"failures:                   {report.failures}",
    ]
    return "\n".join(lines) + "\n"


def emit_report(report: EvalReport, out_path: str | Path) -> tuple[Path, Path]:
    """Write the human-readable table to <out>.txt and the machine record to
    <out>.json; returns both paths."""
    txt = Path(str(out_path) + ".txt")
    js = Path(str(out_path) + ".json")
    try:
        txt.write_text(render_report_table(report), encoding="utf-8")
        js.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise FileUnwritable(f"cannot write report to {out_path}") from exc
    return txt, js


# --- synthetic corpus ---------------------------------------------------------

_BRANDS = ["coke", "pepsi", "samsung", "lotte", "orion", "nestle", "danone", "lg"]
_PRODUCTS = [
    "vitamin d3",
    "omega 3 fish oil",
    "green tea extract",
    "instant coffee",
    "protein powder",
    "olive oil",
    "almond milk",
    "dark chocolate",
]
_VARIANTS = ["original", "zero", "mint", "vanilla", "unsweetened", "extra strength"]
_QUANTITIES = ["500ml", "1l", "200g", "1kg", "120 tablets", "60 capsules", "30 pcs"]
_MULTIPLIERS = ["", " × 2", " × 3", " × 6"]

_EQUIV_ALIASES = {"1l": "1000ml", "1kg": "1000g", "500ml": "0.5l", "200g": "0.2kg"}


def generate_corpus(
    n: int = 200, seed: int = 7, label_noise: float = 0.0
) -> list[DatasetRecord]:
    """Desk-scale synthetic pair corpus with known ground-truth labels.

    Positives perturb surface form only (casing, spacing, unit aliases,
    descriptor words); negatives change a real attribute (quantity,
    multiplier, brand, or variant). ``label_noise`` flips that fraction of
    labels at random, mirroring real annotation error rates.
    """
    rng = random.Random(seed)
    records: list[DatasetRecord] = []
    seen: set[tuple[str, str]] = set()
    while len(records) < n:
        brand = rng.choice(_BRANDS)
        product = rng.choice(_PRODUCTS)
        variant = rng.choice(_VARIANTS)
        qty = rng.choice(_QUANTITIES)
        mult = rng.choice(_MULTIPLIERS)
        base = f"{brand} {product} {variant} {qty}{mult}"
        positive = rng.random() < 0.5
        if positive:
            kind = rng.randrange(4)
            if kind == 0:
                compared = base.upper()
            elif kind == 1:
                compared = base.replace(" ", "  ")
            elif kind == 2 and qty in _EQUIV_ALIASES:
                compared = base.replace(qty, _EQUIV_ALIASES[qty])
            else:
                compared = f"{base} premium quality"
            label = 1
        else:
            kind = rng.randrange(4)
            if kind == 0:
                other_qty = rng.choice([q for q in _QUANTITIES if q != qty])
                compared = base.replace(qty, other_qty)
            elif kind == 1:
                other_mult = rng.choice([m for m in _MULTIPLIERS if m != mult])
                compared = base.replace(qty + mult, qty + other_mult)
            elif kind == 2:
                other_brand = rng.choice([b for b in _BRANDS if b != brand])
                compared = f"{other_brand} {product} {variant} {qty}{mult}"
            else:
                other_variant = rng.choice([v for v in _VARIANTS if v != variant])
                compared = f"{brand} {product} {other_variant} {qty}{mult}"
            label = 0
        if compared == base or (base, compared) in seen:
            continue
        seen.add((base, compared))
        if label_noise > 0 and rng.random() < label_noise:
            label = 1 - label
        records.append(DatasetRecord(base, compared, label))
    return records
