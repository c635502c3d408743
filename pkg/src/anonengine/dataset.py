"""Training-data preparation: tokens, IOB2 tags, windows, splits, sampling.

Sentences longer than the model's input size are cut into overlapping
token windows; sentences without any entity are downsampled to a fixed
ratio of the positive count so the tag distribution stays workable; the
document-level split keeps every sentence of a ruling in one partition.
"""
from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .corpus import CharSpan, Document, EntitySpan
from .errors import InsufficientCorpus, InvalidConfig, OverlapError

# Placeholders like "A.________" must stay one token; otherwise words,
# then any single non-space symbol.
_TOKEN = re.compile(r"[A-Z]\._{2,}|\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str, base: int = 0) -> list[tuple[str, CharSpan]]:
    """Split text into (surface, span) tokens with document offsets."""
    out = []
    for m in _TOKEN.finditer(text):
        out.append((m.group(), CharSpan(base + m.start(), base + m.end())))
    return out


class DocToken(NamedTuple):
    text: str
    span: CharSpan
    sentence: int


def doc_tokens(doc: Document) -> list[DocToken]:
    """All tokens of a document, tagged with their sentence index."""
    tokens: list[DocToken] = []
    for idx, s in enumerate(doc.sentences):
        for surface, span in tokenize(doc.text[s.start:s.end], base=s.start):
            tokens.append(DocToken(surface, span, idx))
    return tokens


def to_iob2(tokens: Sequence[tuple[str, CharSpan]] | Sequence[DocToken],
            entities: Sequence[EntitySpan],
            warnings: list[str] | None = None) -> list[str]:
    """Project character-level entities onto tokens as B-/I-/O tags.

    Entities must not overlap each other.  An entity edge inside a token
    snaps outward to cover the whole token; that is reported through the
    warnings list.  An entity overlapping no token at all is dropped, with
    a warning.
    """
    ordered = sorted(entities, key=lambda e: (e.start, e.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.span.overlaps(b.span):
            raise OverlapError(
                f"entities [{a.start},{a.end}) and [{b.start},{b.end}) overlap")
    tags = ["O"] * len(tokens)
    claimed = [False] * len(tokens)
    for ent in ordered:
        hit = [i for i, t in enumerate(tokens)
               if t[1].start < ent.end and ent.start < t[1].end]
        if not hit:
            if warnings is not None:
                warnings.append(
                    f"entity {ent.label} [{ent.start},{ent.end}) covers no token")
            continue
        free = [i for i in hit if not claimed[i]]
        if len(free) < len(hit):
            if warnings is not None:
                warnings.append(
                    f"entity {ent.label} [{ent.start},{ent.end}) collides with "
                    f"an already tagged token; skipped")
            continue
        first, last = hit[0], hit[-1]
        if warnings is not None:
            if tokens[first][1].start < ent.start or ent.end < tokens[last][1].end:
                warnings.append(
                    f"entity {ent.label} [{ent.start},{ent.end}) snapped "
                    f"outward to token bounds "
                    f"[{tokens[first][1].start},{tokens[last][1].end})")
        tags[first] = f"B-{ent.label}"
        for i in hit[1:]:
            tags[i] = f"I-{ent.label}"
        for i in hit:
            claimed[i] = True
    return tags


# ---------------------------------------------------------------------------
# Windowing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrepConfig:
    max_seq_len: int = 192
    truncation_stride_ratio: float = 0.5
    neg_to_pos_ratio: float = 1.5
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    rng_seed: int = 0
    negatives_per_language: bool = True

    def __post_init__(self) -> None:
        if self.max_seq_len < 1:
            raise InvalidConfig("max_seq_len must be positive")
        if not 0.0 <= self.truncation_stride_ratio < 1.0:
            raise InvalidConfig("truncation_stride_ratio must be in [0, 1)")
        if self.neg_to_pos_ratio < 0:
            raise InvalidConfig("neg_to_pos_ratio must be non-negative")
        if len(self.split_fractions) != 3 or any(f <= 0 for f in self.split_fractions):
            raise InvalidConfig("split_fractions must be three positive numbers")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise InvalidConfig("split_fractions must sum to 1")


def chunk_windows(n_tokens: int, max_seq_len: int,
                  stride_ratio: float) -> list[tuple[int, int]]:
    """Overlapping [start, end) token windows covering n_tokens.

    The overlap is round(max_seq_len * stride_ratio); the last window is
    right-aligned so no token is dropped.  Short sequences give a single
    window; zero tokens give no window.
    """
    if n_tokens < 0:
        raise InvalidConfig("token count cannot be negative")
    if n_tokens == 0:
        return []
    w = max_seq_len
    if n_tokens <= w:
        return [(0, n_tokens)]
    overlap = round(w * stride_ratio)
    step = w - overlap
    if step <= 0:
        raise InvalidConfig(
            f"stride ratio {stride_ratio} leaves no forward step for "
            f"window size {w}")
    starts = []
    k = 0
    while k * step + w < n_tokens:
        starts.append(k * step)
        k += 1
    windows = [(s, s + w) for s in starts]
    windows.append((n_tokens - w, n_tokens))
    return windows


@dataclass(frozen=True)
class TrainingExample:
    """One model input: a token window of a sentence with IOB2 labels."""

    doc_id: str
    language: str
    sentence_index: int
    window: tuple[int, int]
    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.labels):
            raise InvalidConfig("tokens and labels length differ")

    @property
    def is_positive(self) -> bool:
        return any(tag != "O" for tag in self.labels)


def _repair_leading(labels: list[str]) -> list[str]:
    """A window cut through an entity starts with I-; promote it to B-."""
    if labels and labels[0].startswith("I-"):
        labels[0] = "B-" + labels[0][2:]
    for i in range(1, len(labels)):
        if labels[i].startswith("I-") and labels[i - 1] == "O":
            labels[i] = "B-" + labels[i][2:]
    return labels


def sentence_examples(doc: Document, cfg: PrepConfig,
                      warnings: list[str] | None = None) -> list[TrainingExample]:
    """Window every sentence of a document into training examples."""
    examples: list[TrainingExample] = []
    for idx, s in enumerate(doc.sentences):
        tokens = tokenize(doc.text[s.start:s.end], base=s.start)
        if not tokens:
            continue
        inside = [e for e in doc.gold
                  if e.start < s.end and s.start < e.end]
        tags = to_iob2(tokens, inside, warnings)
        for w_start, w_end in chunk_windows(
                len(tokens), cfg.max_seq_len, cfg.truncation_stride_ratio):
            window_tokens = tuple(t[0] for t in tokens[w_start:w_end])
            window_tags = _repair_leading(list(tags[w_start:w_end]))
            examples.append(TrainingExample(
                doc_id=doc.id, language=doc.language, sentence_index=idx,
                window=(w_start, w_end), tokens=window_tokens,
                labels=tuple(window_tags)))
    return examples


def sample_negatives(examples: Sequence[TrainingExample],
                     ratio: float, rng: random.Random) -> list[TrainingExample]:
    """Keep all positives plus floor(ratio * positives) sampled negatives.

    Relative order of the kept examples is preserved.
    """
    positives = [e for e in examples if e.is_positive]
    negative_idx = [i for i, e in enumerate(examples) if not e.is_positive]
    keep_n = min(len(negative_idx), math.floor(ratio * len(positives)))
    kept = set(rng.sample(negative_idx, keep_n)) if keep_n else set()
    return [e for i, e in enumerate(examples)
            if e.is_positive or i in kept]


# ---------------------------------------------------------------------------
# Corpus split
# ---------------------------------------------------------------------------

def split_corpus(docs: Sequence[Document], cfg: PrepConfig
                 ) -> dict[str, list[Document]]:
    """Shuffle documents and split them 80/10/10 at document granularity.

    Validation and test each get floor(fraction * n) documents but never
    fewer than one; the remainder trains.  Fewer than three documents
    cannot populate three partitions.
    """
    if len(docs) < 3:
        raise InsufficientCorpus(
            f"need at least 3 documents to split, got {len(docs)}")
    order = list(docs)
    random.Random(cfg.rng_seed).shuffle(order)
    n = len(order)
    n_val = max(1, math.floor(cfg.split_fractions[1] * n))
    n_test = max(1, math.floor(cfg.split_fractions[2] * n))
    n_train = n - n_val - n_test
    if n_train < 1:
        raise InsufficientCorpus(
            f"split of {n} documents leaves no training document")
    return {
        "train": order[:n_train],
        "val": order[n_train:n_train + n_val],
        "test": order[n_train + n_val:],
    }


def prepare_corpus(docs: Sequence[Document], cfg: PrepConfig,
                   warnings: list[str] | None = None
                   ) -> dict[str, list[TrainingExample]]:
    """Full preparation: split, window, and downsample negatives.

    Negative sampling runs within each (split, language) group so no
    partition or language is starved.  Output order inside a split is
    (doc_id, sentence_index, window start).
    """
    splits = split_corpus(docs, cfg)
    out: dict[str, list[TrainingExample]] = {}
    rng = random.Random(cfg.rng_seed)
    for split_name in ("train", "val", "test"):
        split_docs = sorted(splits[split_name], key=lambda d: d.id)
        collected: list[TrainingExample] = []
        if cfg.negatives_per_language:
            groups = sorted({d.language for d in split_docs})
        else:
            groups = [None]
        for lang in groups:
            group_docs = [d for d in split_docs
                          if lang is None or d.language == lang]
            examples: list[TrainingExample] = []
            for doc in group_docs:
                examples.extend(sentence_examples(doc, cfg, warnings))
            collected.extend(sample_negatives(examples, cfg.neg_to_pos_ratio, rng))
        collected.sort(key=lambda e: (e.doc_id, e.sentence_index, e.window[0]))
        out[split_name] = collected
    return out


# ---------------------------------------------------------------------------
# Window label reconstruction (inference side)
# ---------------------------------------------------------------------------

def reconstruct_window_labels(n_tokens: int,
                              windows: Sequence[tuple[int, int]],
                              window_labels: Sequence[Sequence[str]]) -> list[str]:
    """Merge per-window label rows back into one row per token.

    Where windows overlap, the window whose center is nearest to the token
    wins; ties go to the earlier window.
    """
    if len(windows) != len(window_labels):
        raise InvalidConfig("windows and label rows differ in count")
    labels = ["O"] * n_tokens
    best: list[tuple[float, int] | None] = [None] * n_tokens
    for order, ((w_start, w_end), row) in enumerate(zip(windows, window_labels)):
        if len(row) != w_end - w_start:
            raise InvalidConfig(
                f"label row {order} has {len(row)} labels for a "
                f"{w_end - w_start}-token window")
        center = (w_start + w_end - 1) / 2
        for offset, tag in enumerate(row):
            idx = w_start + offset
            key = (abs(center - idx), order)
            if best[idx] is None or key < best[idx]:
                best[idx] = key
                labels[idx] = tag
    return _repair_leading(labels)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

_STAT_RANGES = {
    "tokens": (10.0, 100000.0),
    "entities": (10.0, 100000.0),
    "anonymized_tokens": (1.0, 10000.0),
    "anonymized_entities": (1.0, 10000.0),
}


def _log_histogram(values: list[int], low: float, high: float) -> dict:
    """Counts on 40 log10-spaced bins; out-of-range values hit edge bins."""
    edges = np.logspace(np.log10(low), np.log10(high), num=41)
    if values:
        clipped = np.clip(np.asarray(values, dtype=float), low, high)
        counts, _ = np.histogram(clipped, bins=edges)
    else:
        counts = np.zeros(40, dtype=int)
    return {"bin_edges": edges.tolist(),
            "counts": counts.astype(int).tolist()}


def corpus_stats(docs: Iterable[Document]) -> dict:
    """Per-language document-size measures with log-binned histograms.

    For every document: its token count, gold entity count, and the
    token/entity counts that anonymization touches (tokens overlapped by
    a gold span; gold spans overlapping at least one token).
    """
    measures = {name: {} for name in _STAT_RANGES}  # name -> lang -> [counts]
    documents_per_language: dict[str, int] = {}
    for doc in docs:
        tokens = doc_tokens(doc)
        covered = sum(
            1 for t in tokens
            if any(e.start < t.span.end and t.span.start < e.end
                   for e in doc.gold))
        grounded = sum(
            1 for e in doc.gold
            if any(e.start < t.span.end and t.span.start < e.end
                   for t in tokens))
        values = {
            "tokens": len(tokens),
            "entities": len(doc.gold),
            "anonymized_tokens": covered,
            "anonymized_entities": grounded,
        }
        for name, value in values.items():
            measures[name].setdefault(doc.language, []).append(value)
        documents_per_language[doc.language] = (
            documents_per_language.get(doc.language, 0) + 1)

    result: dict = {
        "documents": int(sum(documents_per_language.values())),
        "documents_per_language": dict(sorted(documents_per_language.items())),
    }
    for name, (low, high) in _STAT_RANGES.items():
        per_language = {}
        for lang in sorted(measures[name]):
            values = measures[name][lang]
            per_language[lang] = {
                "total": int(sum(values)),
                "histogram": _log_histogram(values, low, high),
            }
        all_values = [v for vals in measures[name].values() for v in vals]
        result[name] = {
            "total": int(sum(all_values)),
            "per_language": per_language,
        }
    return result


def write_examples_jsonl(examples: Iterable[TrainingExample],
                         path: str | Path) -> int:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for ex in examples:
            handle.write(json.dumps({
                "doc_id": ex.doc_id,
                "language": ex.language,
                "sentence_index": ex.sentence_index,
                "window": list(ex.window),
                "tokens": list(ex.tokens),
                "labels": list(ex.labels),
            }, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count
