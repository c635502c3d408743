"""Placeholder assignment and rendering of the anonymized ruling.

Every accepted surface maps to exactly one placeholder (and distinct
surfaces to distinct placeholders); replacement happens right to left
so character offsets stay valid while editing.
"""
from __future__ import annotations

import html
import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import CharSpan, Document, EntitySpan
from .dataset import doc_tokens
from .errors import InvalidConfig, MissingReplacement, OverlapError

log = logging.getLogger(__name__)

POLICIES = ("letters", "label_numbered", "custom")


def _letter_series(index: int) -> str:
    """0→A, 1→B, …, 25→Z, 26→AA, 27→AB, … (bijective base 26)."""
    letters = []
    index += 1
    while index > 0:
        index, rem = divmod(index - 1, 26)
        letters.append(chr(ord("A") + rem))
    return "".join(reversed(letters))


def letter_placeholder(index: int) -> str:
    """Party-style placeholder: letter(s), a period, eight underscores."""
    return _letter_series(index) + "." + "_" * 8


def _ordered_surfaces(accepted: Sequence[EntitySpan]) -> list[EntitySpan]:
    """One representative per surface, in first-occurrence order."""
    ordered = sorted(accepted, key=lambda e: (e.start, e.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.span.overlaps(b.span):
            raise OverlapError(
                f"accepted spans [{a.start},{a.end}) and "
                f"[{b.start},{b.end}) overlap")
    seen: dict[str, EntitySpan] = {}
    for ent in ordered:
        seen.setdefault(ent.surface, ent)
    return list(seen.values())


def assign_placeholders(doc: Document, accepted: Sequence[EntitySpan],
                        policy: str = "letters",
                        custom: Mapping[str, str] | None = None
                        ) -> dict[str, str]:
    """Build the surface → placeholder map for a document.

    letters: "A.________", "B.________", … in first-occurrence order,
    continuing with "AA.________" after "Z.________".
    label_numbered: "⟨PER_1⟩", "⟨PER_2⟩", "⟨LOC_1⟩", … numbered per label
    in first-occurrence order.
    custom: caller-provided surface → placeholder entries.

    The map is injective; a placeholder that would collide with another
    placeholder or with a token still present outside the replaced spans
    gets a numeric suffix.
    """
    if policy not in POLICIES:
        raise InvalidConfig(f"unknown replacement policy {policy!r}")
    representatives = _ordered_surfaces(accepted)

    # Tokens that remain after redaction; a placeholder equal to one of
    # these would make the output ambiguous.
    replaced = [e.span for e in accepted]
    remaining = {
        t.text for t in doc_tokens(doc)
        if not any(t.span.overlaps(s) for s in replaced)
    }

    mapping: dict[str, str] = {}
    used: set[str] = set()
    label_counters: dict[str, int] = {}
    for i, ent in enumerate(representatives):
        if policy == "letters":
            base = letter_placeholder(i)
        elif policy == "label_numbered":
            label_counters[ent.label] = label_counters.get(ent.label, 0) + 1
            base = f"⟨{ent.label}_{label_counters[ent.label]}⟩"
        else:
            if custom is None or ent.surface not in custom:
                raise MissingReplacement(
                    f"no custom replacement for surface {ent.surface!r}")
            base = custom[ent.surface]
        placeholder = base
        suffix = 2
        while placeholder in used or placeholder in remaining:
            if placeholder in used:
                log.warning(
                    "placeholder %r already taken; surface %r gets a "
                    "numbered variant", placeholder, ent.surface)
            placeholder = f"{base}{suffix}"
            suffix += 1
        mapping[ent.surface] = placeholder
        used.add(placeholder)
    return mapping


@dataclass(frozen=True)
class Replacement:
    """One applied substitution with offsets in both coordinate spaces."""

    original: CharSpan       # span in the source text
    replaced: CharSpan       # span in the anonymized text
    surface: str
    placeholder: str
    label: str
    status: str = "accepted"


@dataclass(frozen=True)
class AnonymizedDocument:
    doc_id: str
    text: str
    replacements: tuple[Replacement, ...]


def render(doc: Document, accepted: Sequence[EntitySpan],
           mapping: Mapping[str, str],
           statuses: Mapping[tuple[int, int], str] | None = None
           ) -> AnonymizedDocument:
    """Apply the replacement map to the document text.

    Spans are replaced right to left so source offsets stay valid during
    editing; the result records, for every replacement, its span in the
    original and in the anonymized text.  Text outside the spans is
    untouched.
    """
    ordered = sorted(accepted, key=lambda e: (e.start, e.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.span.overlaps(b.span):
            raise OverlapError(
                f"spans [{a.start},{a.end}) and [{b.start},{b.end}) overlap")
    for ent in ordered:
        if ent.surface not in mapping:
            raise MissingReplacement(
                f"surface {ent.surface!r} at [{ent.start},{ent.end}) has "
                f"no replacement")

    text = doc.text
    for ent in reversed(ordered):
        text = text[:ent.start] + mapping[ent.surface] + text[ent.end:]

    replacements: list[Replacement] = []
    shift = 0
    for ent in ordered:
        placeholder = mapping[ent.surface]
        new_start = ent.start + shift
        new_end = new_start + len(placeholder)
        status = "accepted"
        if statuses is not None:
            status = statuses.get((ent.start, ent.end), "accepted")
        replacements.append(Replacement(
            original=ent.span, replaced=CharSpan(new_start, new_end),
            surface=ent.surface, placeholder=placeholder,
            label=ent.label, status=status))
        shift += len(placeholder) - len(ent.span)
    return AnonymizedDocument(
        doc_id=doc.id, text=text, replacements=tuple(replacements))


def restore_original(anonymized: AnonymizedDocument) -> str:
    """Invert a rendering by substituting original surfaces back."""
    text = anonymized.text
    for rep in sorted(anonymized.replacements,
                      key=lambda r: r.replaced.start, reverse=True):
        text = (text[:rep.replaced.start] + rep.surface
                + text[rep.replaced.end:])
    return text


_HTML_STYLE = """\
body { font-family: serif; margin: 2rem; }
pre { white-space: pre-wrap; font-family: inherit; }
mark.anon { background: #ffd700; padding: 0 0.1em; }
mark.anon[data-status="accepted"] { background: #d4af37; }
mark.anon[data-status="pending"] { background: #ffff66; }
"""


def render_html(anonymized: AnonymizedDocument,
                surface_ids: Mapping[str, str] | None = None) -> str:
    """HTML export: replaced spans wrapped in data-carrying mark tags."""
    if surface_ids is None:
        ordered: dict[str, str] = {}
        for rep in anonymized.replacements:
            ordered.setdefault(rep.surface, f"s{len(ordered) + 1}")
        surface_ids = ordered
    parts = [f"<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
             f"<style>\n{_HTML_STYLE}</style>\n</head>\n<body>\n<pre>"]
    cursor = 0
    text = anonymized.text
    for rep in sorted(anonymized.replacements, key=lambda r: r.replaced.start):
        parts.append(html.escape(text[cursor:rep.replaced.start]))
        sid = surface_ids.get(rep.surface, "")
        parts.append(
            f'<mark class="anon" data-surface-id="{html.escape(sid)}" '
            f'data-status="{html.escape(rep.status)}">'
            f"{html.escape(text[rep.replaced.start:rep.replaced.end])}</mark>")
        cursor = rep.replaced.end
    parts.append(html.escape(text[cursor:]))
    parts.append("</pre>\n</body>\n</html>\n")
    return "".join(parts)
