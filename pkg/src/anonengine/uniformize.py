"""Document-wide surface propagation.

Once a term is detected anywhere in a ruling, every other occurrence of
the same surface must be treated the same way.  This trades precision
for recall: a surface misdetected once now marks all its occurrences.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import CharSpan, Document, EntitySpan
from .dataset import doc_tokens
from .detectors import SOURCE_PRIORITY
from .errors import InvalidConfig, OverlapError


@dataclass(frozen=True)
class UniformizeConfig:
    case_sensitive: bool = True
    whole_token: bool = True
    min_surface_len: int = 2
    max_ngram: int = 6

    def __post_init__(self) -> None:
        if self.min_surface_len < 1:
            raise InvalidConfig("min_surface_len must be at least 1")
        if self.max_ngram < 1:
            raise InvalidConfig("max_ngram must be at least 1")


def surface_index(doc: Document,
                  max_ngram: int = 6) -> Mapping[str, tuple[CharSpan, ...]]:
    """Map every token n-gram surface (n ≤ max_ngram) to its occurrences.

    Keys are exact text slices from first to last token of the n-gram, so
    multi-token surfaces keep their original inner whitespace.
    """
    tokens = doc_tokens(doc)
    index: dict[str, list[CharSpan]] = {}
    for i in range(len(tokens)):
        for n in range(1, max_ngram + 1):
            if i + n > len(tokens):
                break
            span = CharSpan(tokens[i].span.start, tokens[i + n - 1].span.end)
            index.setdefault(doc.text[span.start:span.end], []).append(span)
    return {surface: tuple(spans) for surface, spans in index.items()}


def _scan_occurrences(doc: Document, surface: str,
                      cfg: UniformizeConfig) -> list[CharSpan]:
    """Fallback string scan used when the n-gram index cannot answer."""
    haystack = doc.text if cfg.case_sensitive else doc.text.lower()
    needle = surface if cfg.case_sensitive else surface.lower()
    if not needle:
        return []
    tokens = doc_tokens(doc)
    starts = {t.span.start for t in tokens}
    ends = {t.span.end for t in tokens}
    found: list[CharSpan] = []
    offset = haystack.find(needle)
    while offset != -1:
        end = offset + len(needle)
        if not cfg.whole_token or (offset in starts and end in ends):
            found.append(CharSpan(offset, end))
        offset = haystack.find(needle, offset + 1)
    return found


def uniformize(doc: Document, spans: Sequence[EntitySpan],
               cfg: UniformizeConfig | None = None, *,
               index: Mapping[str, tuple[CharSpan, ...]] | None = None
               ) -> list[EntitySpan]:
    """Propagate every detected surface across the whole document.

    Every occurrence of a detected surface gains a span carrying that
    surface's label with source "uniformized"; the input spans come
    through verbatim and outrank propagated ones on overlap.  The result
    is a sorted non-overlapping superset of the input, and running the
    operation twice changes nothing.
    """
    cfg = cfg or UniformizeConfig()
    ordered = sorted(spans, key=lambda e: (e.start, e.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.span.overlaps(b.span):
            raise OverlapError(
                f"input spans [{a.start},{a.end}) and [{b.start},{b.end}) "
                f"overlap")
    if not ordered:
        return []

    rank = {source: i for i, source in enumerate(SOURCE_PRIORITY)}
    # One propagation decision per distinct surface: the best-ranked
    # detection (then the earliest) supplies label and confidence.
    chosen: dict[str, EntitySpan] = {}
    for ent in ordered:
        if len(ent.surface) < cfg.min_surface_len:
            continue
        best = chosen.get(ent.surface)
        if best is None or (
                (rank.get(ent.source, len(rank)), ent.start)
                < (rank.get(best.source, len(rank)), best.start)):
            chosen[ent.surface] = ent

    can_index = cfg.case_sensitive and cfg.whole_token
    if can_index and index is None:
        index = surface_index(doc, cfg.max_ngram)

    propagated: list[EntitySpan] = []
    existing = {(e.start, e.end) for e in ordered}
    for surface, origin in chosen.items():
        if can_index and index is not None and surface in index:
            occurrences = list(index[surface])
        else:
            occurrences = _scan_occurrences(doc, surface, cfg)
        for span in occurrences:
            if (span.start, span.end) in existing:
                continue
            propagated.append(EntitySpan(
                span=span, label=origin.label,
                surface=doc.text[span.start:span.end],
                source="uniformized", confidence=origin.confidence))

    # Originals survive unconditionally (the superset guarantee); among
    # propagated spans the longer, then the earlier, wins an overlap.
    propagated.sort(key=lambda e: (-len(e.span), e.start, e.end, e.label))
    kept: list[EntitySpan] = []
    for cand in propagated:
        if any(cand.span.overlaps(o.span) for o in ordered):
            continue
        if any(cand.span.overlaps(k.span) for k in kept):
            continue
        kept.append(cand)
    return sorted(ordered + kept, key=lambda e: (e.start, e.end))
