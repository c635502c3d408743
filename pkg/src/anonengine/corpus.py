"""Core document model: rulings, character spans, entity annotations.

All offsets count Unicode scalar values (Python string indices) into the
document text, never bytes.  Spans are half-open [start, end).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import EmptyDocument, SpanOutOfBounds, ValidationError
from .sentences import segment_sentences

LANGUAGES = ("de", "fr", "it")
DEFAULT_LABELS = ("PER", "LOC", "ORG", "MISC")


@dataclass(frozen=True, order=True)
class CharSpan:
    """Half-open [start, end) interval of character offsets."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValidationError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "CharSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, other: "CharSpan") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class EntitySpan:
    """One annotated or detected entity occurrence."""

    span: CharSpan
    label: str
    surface: str
    source: str = "gold"
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not self.label:
            raise ValidationError("entity label must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(
                f"confidence {self.confidence!r} outside [0, 1]")

    @property
    def start(self) -> int:
        return self.span.start

    @property
    def end(self) -> int:
        return self.span.end


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("duplicate labels in label set")

    def __contains__(self, label: str) -> bool:
        return label in self.labels


def _check_sentences(text: str, sentences: Sequence[CharSpan]) -> None:
    previous_end = 0
    for s in sentences:
        if s.end > len(text):
            raise ValidationError(
                f"sentence span {s} exceeds text length {len(text)}")
        if s.start < previous_end:
            raise ValidationError("sentence spans overlap or are unsorted")
        previous_end = s.end


@dataclass(frozen=True)
class Document:
    """An immutable ruling with sentence spans and optional gold entities."""

    id: str
    language: str
    text: str
    sentences: tuple[CharSpan, ...]
    gold: tuple[EntitySpan, ...] = ()

    def __post_init__(self) -> None:
        if self.language not in LANGUAGES:
            raise ValidationError(f"unsupported language {self.language!r}")
        if not self.text.strip():
            raise EmptyDocument(f"document {self.id!r} has no content")
        _check_sentences(self.text, self.sentences)
        for ent in self.gold:
            actual = self.span_text(ent.span)
            if ent.surface != actual:
                raise ValidationError(
                    f"gold surface {ent.surface!r} does not match text "
                    f"{actual!r} at [{ent.start}, {ent.end})")

    def span_text(self, span: CharSpan) -> str:
        if span.end > len(self.text):
            raise SpanOutOfBounds(
                f"span [{span.start}, {span.end}) exceeds document "
                f"length {len(self.text)}")
        return self.text[span.start:span.end]

    def sentence_of(self, offset: int) -> int | None:
        """Index of the sentence span containing a character offset."""
        for idx, s in enumerate(self.sentences):
            if s.start <= offset < s.end:
                return idx
        return None

    def crosses_sentences(self, span: CharSpan) -> bool:
        """Whether a span is not fully inside one sentence span."""
        for s in self.sentences:
            if s.contains(span):
                return False
        return True


def _normalize_newlines(raw: str) -> str:
    return raw.replace("\r\n", "\n").replace("\r", "\n")


def document_id(language: str, text: str) -> str:
    digest = hashlib.sha256(f"{language}\n{text}".encode("utf-8")).hexdigest()
    return digest[:16]


def ingest_text(raw: str, language: str, doc_id: str | None = None) -> Document:
    """Build a document from raw text: normalize newlines, segment, id."""
    text = _normalize_newlines(raw)
    if not text.strip():
        raise EmptyDocument("refusing to ingest whitespace-only text")
    sentences = tuple(CharSpan(s, e) for s, e in segment_sentences(text, language))
    return Document(
        id=doc_id or document_id(language, text),
        language=language,
        text=text,
        sentences=sentences,
    )


def attach_gold(doc: Document, annotations: Iterable[tuple[int, int, str]]) -> Document:
    """Return a copy of the document carrying the given gold annotations."""
    gold = []
    for start, end, label in annotations:
        span = CharSpan(start, end)
        gold.append(EntitySpan(span=span, label=label,
                               surface=doc.span_text(span), source="gold"))
    gold.sort(key=lambda e: (e.start, e.end))
    return replace(doc, gold=tuple(gold))


# ---------------------------------------------------------------------------
# JSONL interchange
# ---------------------------------------------------------------------------

def document_to_record(doc: Document) -> dict:
    return {
        "id": doc.id,
        "language": doc.language,
        "text": doc.text,
        "sentences": [[s.start, s.end] for s in doc.sentences],
        "gold": [
            {"start": e.start, "end": e.end, "label": e.label}
            for e in doc.gold
        ],
    }


def document_from_record(record: dict, *, where: str = "<record>") -> Document:
    def fail(field_name: str, why: str) -> ValidationError:
        return ValidationError(f"{where}: field {field_name!r} {why}")

    if not isinstance(record, dict):
        raise ValidationError(f"{where}: expected an object")
    for name in ("id", "language", "text"):
        if name not in record:
            raise fail(name, "is missing")
        if not isinstance(record[name], str):
            raise fail(name, "must be a string")
    text = record["text"]
    if "sentences" in record and record["sentences"] is not None:
        try:
            sentences = tuple(CharSpan(int(s), int(e)) for s, e in record["sentences"])
        except (TypeError, ValueError, ValidationError) as exc:
            raise fail("sentences", f"is malformed ({exc})") from exc
    else:
        sentences = tuple(
            CharSpan(s, e) for s, e in segment_sentences(text, record["language"]))
    gold = []
    for i, g in enumerate(record.get("gold") or ()):
        if not isinstance(g, dict):
            raise fail(f"gold[{i}]", "must be an object")
        try:
            span = CharSpan(int(g["start"]), int(g["end"]))
            label = str(g["label"])
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise fail(f"gold[{i}]", f"is malformed ({exc})") from exc
        if span.end > len(text):
            raise fail(f"gold[{i}]", "exceeds text length")
        gold.append(EntitySpan(span=span, label=label,
                               surface=text[span.start:span.end], source="gold"))
    try:
        return Document(
            id=record["id"], language=record["language"], text=text,
            sentences=sentences, gold=tuple(gold))
    except (EmptyDocument, ValidationError) as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def read_documents_jsonl(path: str | Path) -> Iterator[Document]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            yield document_from_record(record, where=f"{path}:{lineno}")


def write_documents_jsonl(docs: Iterable[Document], path: str | Path) -> int:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for doc in docs:
            handle.write(json.dumps(document_to_record(doc),
                                    ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count
