"""Deterministic rule-based sentence segmentation for court rulings.

A boundary is placed after a terminal character run ({. ! ? :}) that is
followed by at least one whitespace character and then an uppercase letter
or a digit.  Boundaries after a single "." are suppressed when the token
ending at the period is

- a known abbreviation for the language ("Art.", "Jan.", "evtl.", ...),
  loaded from a data file shipped with the package,
- a short ordinal such as "1." or "31." (day-of-month, enumeration item;
  four-digit years like "2020." still terminate a sentence), or
- a party initial or anonymization placeholder ("A.", "B.________"),
  unless the following whitespace contains a newline.  Mid-line these are
  section enumerations or initials; at a line end they close a sentence.

The rules are pure functions of (text, language, abbreviation table), so
identical input always yields identical spans, regardless of thread
schedule or platform.
"""
from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources

_TERMINALS = frozenset(".!?:")
_PARTY_TOKEN = re.compile(r"[A-Z]\.(_{2,})?")
_ORDINAL_TOKEN = re.compile(r"\d{1,2}\.")
# Single lowercase letter + period: the spaced halves of "z. B.",
# "u. a.", "p. ex." and the like.  Sentences do not end on these.
_LOWER_INITIAL = re.compile(r"[a-z]\.")


@lru_cache(maxsize=None)
def _abbreviation_table(language: str) -> frozenset[str]:
    raw = resources.files("anonengine.data").joinpath("abbreviations.json").read_text("utf-8")
    tables = json.loads(raw)
    return frozenset(tables.get(language, ()))


def _token_before(text: str, terminal_end: int) -> str:
    """Whitespace-delimited token ending at (and including) the terminal."""
    start = terminal_end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start : terminal_end + 1]
    # Strip opening brackets/quotes so "(Art." still hits the table, and
    # elided articles so "L'art." matches "art.".
    while token and not (token[0].isalnum() or token[0] == "_"):
        token = token[1:]
    for apostrophe in ("'", "’", "ʼ"):
        if apostrophe in token:
            token = token.rsplit(apostrophe, 1)[1]
    return token


def _suppressed(text: str, run_start: int, run_end: int, ws_end: int,
                table: frozenset[str]) -> bool:
    if not (run_start == run_end and text[run_start] == "."):
        return False  # abbreviation rules only concern a single period
    token = _token_before(text, run_end)
    if token in table:
        return True
    if _ORDINAL_TOKEN.fullmatch(token):
        return True
    if _LOWER_INITIAL.fullmatch(token):
        return True
    if _PARTY_TOKEN.fullmatch(token):
        # A newline after the initial means a genuine line/sentence end.
        return "\n" not in text[run_end + 1 : ws_end]
    return False


def sentence_boundaries(text: str, language: str,
                        abbreviations: frozenset[str] | None = None) -> list[int]:
    """Return boundary offsets (each one past the end of a terminal run)."""
    table = abbreviations if abbreviations is not None else _abbreviation_table(language)
    boundaries: list[int] = []
    n = len(text)
    i = 0
    while i < n:
        if text[i] not in _TERMINALS:
            i += 1
            continue
        run_end = i
        while run_end + 1 < n and text[run_end + 1] in _TERMINALS:
            run_end += 1
        ws_end = run_end + 1
        while ws_end < n and text[ws_end].isspace():
            ws_end += 1
        has_ws = ws_end > run_end + 1
        if (has_ws and ws_end < n
                and (text[ws_end].isupper() or text[ws_end].isdigit())
                and not _suppressed(text, i, run_end, ws_end, table)):
            boundaries.append(run_end + 1)
        i = run_end + 1
    return boundaries


def segment_sentences(text: str, language: str,
                      abbreviations: frozenset[str] | None = None
                      ) -> list[tuple[int, int]]:
    """Split text into sentence spans (half-open character intervals).

    Spans are sorted, pairwise disjoint, and trimmed: the gaps between them
    (and before/after) consist of whitespace only, so that the spans plus
    the gaps reconstruct the full text.  A text without any boundary comes
    back as a single span.
    """
    if not text:
        return []
    spans: list[tuple[int, int]] = []
    cuts = sentence_boundaries(text, language, abbreviations)
    previous = 0
    for cut in cuts + [len(text)]:
        start, end = previous, cut
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))
        previous = cut
    return spans
