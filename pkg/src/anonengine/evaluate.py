"""Span-level scoring: strict exact-match precision, recall, F1.

A predicted span counts as correct only when start, end, and label all
equal a gold span.  Percentages carry two decimals, rounded half away
from zero.  Reports come in a Normal and a Uniformized condition so the
effect of document-wide propagation is visible as a delta.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, localcontext
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Document, EntitySpan
from .dataset import doc_tokens
from .errors import DetectorUnavailable, UnknownLabel

TokenSpan = tuple  # (..., start_token, end_token, label); label is last


def _pct(numerator: int, denominator: int) -> float:
    """Percentage with two decimals, half rounded away from zero."""
    if denominator == 0:
        return 0.0
    with localcontext() as ctx:
        ctx.prec = 50
        value = Decimal(100 * numerator) / Decimal(denominator)
        return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# IOB2 span extraction
# ---------------------------------------------------------------------------

def extract_spans(labels: Sequence[str],
                  warnings: list[str] | None = None
                  ) -> list[tuple[int, int, str]]:
    """Decode IOB2 tags into (start, end, label) token spans.

    Maximal B-x (I-x)* runs form spans.  An I-x with no live x-span before
    it opens a new span (lenient repair) and is reported as a warning.
    Tags outside the B-/I-/O shape raise UnknownLabel.
    """
    spans: list[tuple[int, int, str]] = []
    current: tuple[int, str] | None = None  # (start, label)

    def close(end: int) -> None:
        nonlocal current
        if current is not None:
            spans.append((current[0], end, current[1]))
            current = None

    for i, tag in enumerate(labels):
        if tag == "O":
            close(i)
        elif tag.startswith("B-") and len(tag) > 2:
            close(i)
            current = (i, tag[2:])
        elif tag.startswith("I-") and len(tag) > 2:
            label = tag[2:]
            if current is None or current[1] != label:
                if warnings is not None:
                    warnings.append(
                        f"I-{label} at position {i} without an open "
                        f"{label} span; repaired to B-{label}")
                close(i)
                current = (i, label)
        else:
            raise UnknownLabel(f"tag {tag!r} at position {i} is not IOB2")
    close(len(labels))
    return spans


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "LabelMetrics":
        return cls(
            tp=tp, fp=fp, fn=fn,
            precision=_pct(tp, tp + fp),
            recall=_pct(tp, tp + fn),
            f1=_pct(2 * tp, 2 * tp + fp + fn),
        )


@dataclass(frozen=True)
class MacroMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    condition: str
    per_label: Mapping[str, LabelMetrics]
    micro: LabelMetrics
    macro: MacroMetrics
    metadata: Mapping[str, object] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


def score(gold: Iterable[TokenSpan], pred: Iterable[TokenSpan], *,
          condition: str = "normal",
          metadata: Mapping[str, object] | None = None,
          warnings: Sequence[str] = ()) -> EvalReport:
    """Exact-match span scoring; the last tuple element is the label."""
    gold_set = set(gold)
    pred_set = set(pred)
    labels = sorted({s[-1] for s in gold_set} | {s[-1] for s in pred_set})
    per_label: dict[str, LabelMetrics] = {}
    for label in labels:
        g = {s for s in gold_set if s[-1] == label}
        p = {s for s in pred_set if s[-1] == label}
        per_label[label] = LabelMetrics.from_counts(
            tp=len(g & p), fp=len(p - g), fn=len(g - p))
    micro = LabelMetrics.from_counts(
        tp=len(gold_set & pred_set),
        fp=len(pred_set - gold_set),
        fn=len(gold_set - pred_set),
    )
    if per_label:
        n = len(per_label)
        macro = MacroMetrics(
            precision=_pct_mean([m.precision for m in per_label.values()], n),
            recall=_pct_mean([m.recall for m in per_label.values()], n),
            f1=_pct_mean([m.f1 for m in per_label.values()], n),
        )
    else:
        macro = MacroMetrics(0.0, 0.0, 0.0)
    return EvalReport(
        condition=condition, per_label=per_label, micro=micro, macro=macro,
        metadata=dict(metadata or {}), warnings=tuple(warnings))


def _pct_mean(values: Sequence[float], n: int) -> float:
    with localcontext() as ctx:
        ctx.prec = 50
        total = sum(Decimal(str(v)) for v in values)
        return float((total / n).quantize(Decimal("0.01"),
                                          rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# Character spans → token spans
# ---------------------------------------------------------------------------

def entity_token_spans(doc: Document, entities: Iterable[EntitySpan],
                       warnings: list[str] | None = None
                       ) -> set[tuple[str, int, int, str]]:
    """Map character-offset entities onto document-global token indices.

    Boundaries inside a token snap outward.  An entity touching no token
    is dropped with a warning.  Keys carry the document id so sets from
    many documents can be unioned into one corpus-level comparison.
    """
    tokens = doc_tokens(doc)
    out: set[tuple[str, int, int, str]] = set()
    for ent in entities:
        hit = [i for i, t in enumerate(tokens)
               if t.span.start < ent.end and ent.start < t.span.end]
        if not hit:
            if warnings is not None:
                warnings.append(
                    f"{doc.id}: entity {ent.label} [{ent.start},{ent.end}) "
                    f"covers no token; dropped from scoring")
            continue
        out.add((doc.id, hit[0], hit[-1] + 1, ent.label))
    return out


# ---------------------------------------------------------------------------
# Two-condition evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionEvaluation:
    normal: EvalReport
    uniformized: EvalReport
    delta: Mapping[str, float]  # uniformized minus normal, micro metrics


def evaluate_conditions(
        docs: Sequence[Document],
        pipeline: Callable[[Document], list[EntitySpan]],
        uniformize_cfg=None) -> ConditionEvaluation:
    """Score a detector pipeline with and without surface propagation.

    The pipeline maps a document to merged character-span detections.
    A document whose detection raises DetectorUnavailable is skipped in
    both conditions (they must cover identical documents) and reported
    as a warning.
    """
    from .uniformize import UniformizeConfig, uniformize

    cfg = uniformize_cfg or UniformizeConfig()
    gold: set[tuple[str, int, int, str]] = set()
    normal_pred: set[tuple[str, int, int, str]] = set()
    uni_pred: set[tuple[str, int, int, str]] = set()
    warnings: list[str] = []
    evaluated = 0
    for doc in docs:
        try:
            detected = pipeline(doc)
        except DetectorUnavailable as exc:
            warnings.append(f"{doc.id}: detector unavailable ({exc}); "
                            f"document skipped in both conditions")
            continue
        evaluated += 1
        gold |= entity_token_spans(doc, doc.gold, warnings)
        normal_pred |= entity_token_spans(doc, detected, warnings)
        uni_pred |= entity_token_spans(
            doc, uniformize(doc, detected, cfg), warnings)
    metadata = {"documents": len(docs), "documents_evaluated": evaluated}
    normal = score(gold, normal_pred, condition="normal",
                   metadata=metadata, warnings=warnings)
    uniformized = score(gold, uni_pred, condition="uniformized",
                        metadata=metadata, warnings=warnings)
    delta = {
        "precision": round(uniformized.micro.precision - normal.micro.precision, 2),
        "recall": round(uniformized.micro.recall - normal.micro.recall, 2),
        "f1": round(uniformized.micro.f1 - normal.micro.f1, 2),
    }
    return ConditionEvaluation(normal=normal, uniformized=uniformized,
                               delta=delta)


# ---------------------------------------------------------------------------
# Report formatting
# ---------------------------------------------------------------------------

def report_to_dict(report: EvalReport) -> dict:
    def metrics(m: LabelMetrics) -> dict:
        return {"tp": m.tp, "fp": m.fp, "fn": m.fn,
                "precision": m.precision, "recall": m.recall, "f1": m.f1}

    return {
        "condition": report.condition,
        "per_label": {k: metrics(v) for k, v in report.per_label.items()},
        "micro": metrics(report.micro),
        "macro": {"precision": report.macro.precision,
                  "recall": report.macro.recall, "f1": report.macro.f1},
        "metadata": dict(report.metadata),
        "warnings": list(report.warnings),
    }


def evaluation_to_dict(result: ConditionEvaluation) -> dict:
    return {
        "normal": report_to_dict(result.normal),
        "uniformized": report_to_dict(result.uniformized),
        "delta": dict(result.delta),
    }


def format_table(entries: Sequence[tuple[str, EvalReport, EvalReport | None]]
                 ) -> str:
    """Aligned text table: one row per configuration, P/R/F1 per condition."""
    two_conditions = any(u is not None for _, _, u in entries)
    headers = ["Configuration", "P", "R", "F1"]
    if two_conditions:
        headers += ["P", "R", "F1"]
    rows = []
    for name, normal, uniformized in entries:
        row = [name,
               f"{normal.micro.precision:.2f}",
               f"{normal.micro.recall:.2f}",
               f"{normal.micro.f1:.2f}"]
        if two_conditions:
            if uniformized is None:
                row += ["-", "-", "-"]
            else:
                row += [f"{uniformized.micro.precision:.2f}",
                        f"{uniformized.micro.recall:.2f}",
                        f"{uniformized.micro.f1:.2f}"]
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = []
    if two_conditions:
        group = (" " * (widths[0] + 2)
                 + "Normal".center(widths[1] + widths[2] + widths[3] + 4)
                 + "  "
                 + "Uniformizing".center(widths[4] + widths[5] + widths[6] + 4))
        lines.append(group.rstrip())
    lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        cells = [row[0].ljust(widths[0])]
        cells += [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)
