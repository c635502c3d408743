"""Candidate entity detection: regex rules, gazetteers, the rubrum
heuristic, and an external NER model reached over HTTP.

Each detector returns character-offset entity spans tagged with its
source name; merge() resolves overlaps between detectors by a fixed
precision-ordered priority.
"""
from __future__ import annotations

import json
import re
import socket
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .corpus import CharSpan, Document, EntitySpan
from .dataset import DocToken, chunk_windows, doc_tokens, tokenize
from .errors import DetectorUnavailable, InvalidConfig, ProtocolViolation
from .evaluate import extract_spans

SOURCE_PRIORITY = ("gold", "manual", "regex", "model", "conventional",
                   "gazetteer", "uniformized")

DEFAULT_RUBRUM_MARKERS: Mapping[str, tuple[str, ...]] = {
    "de": ("Sachverhalt", "Erwägungen"),
    "fr": ("Faits", "considérant"),
    "it": ("Fatti", "Diritto"),
}

DEFAULT_ROLE_CUES: Mapping[str, tuple[str, ...]] = {
    "de": ("Beschwerdeführer", "Beschwerdegegner"),
    "fr": ("recourant", "intimé"),
    "it": ("ricorrente", "opponente"),
}

# Company-form words that flip a rubrum candidate from PER to ORG.
_LEGAL_FORMS = frozenset(
    {"AG", "GmbH", "SA", "Sàrl", "SpA", "Srl", "Ltd", "Inc", "Co"})

# Capitalized function words that end the back-walk over a party name.
_CAP_STOPWORDS = frozenset({
    "Die", "Der", "Das", "Den", "Dem", "Des", "Ein", "Eine", "Einer", "Und",
    "Le", "La", "Les", "Un", "Une", "Et", "Du", "De",
    "Il", "Lo", "Gli", "I", "Una", "E", "Di", "Del", "Della",
})


@dataclass(frozen=True)
class RegexRule:
    pattern: str
    label: str
    flags: int = 0

    def __post_init__(self) -> None:
        try:
            re.compile(self.pattern, self.flags)
        except re.error as exc:
            raise InvalidConfig(
                f"regex rule for {self.label!r} does not compile: {exc}"
            ) from exc


DEFAULT_REGEX_RULES = (
    RegexRule(r"[A-Z]\._{2,}", "PER"),           # published party placeholders
    RegexRule(r"CH\d{2}(?:\s?\d{4}){4,5}", "MISC"),  # IBAN-like account ids
)


@dataclass(frozen=True)
class DetectorConfig:
    regex_rules: tuple[RegexRule, ...] = DEFAULT_REGEX_RULES
    gazetteer: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    rubrum_markers: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_RUBRUM_MARKERS))
    role_cues: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_ROLE_CUES))
    model_endpoint: str | None = None
    timeout_ms: int = 5000
    min_confidence: float = 0.0

    def __post_init__(self) -> None:
        for language, markers in self.rubrum_markers.items():
            if not markers:
                raise InvalidConfig(
                    f"no rubrum markers configured for {language!r}")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise InvalidConfig("min_confidence must be in [0, 1]")
        if self.timeout_ms <= 0:
            raise InvalidConfig("timeout_ms must be positive")


# ---------------------------------------------------------------------------
# Regex detector
# ---------------------------------------------------------------------------

def detect_regex(doc: Document,
                 rules: Sequence[RegexRule]) -> list[EntitySpan]:
    """Leftmost-longest matches of every rule, confidence 1.0."""
    spans: list[EntitySpan] = []
    for rule in rules:
        for m in re.finditer(rule.pattern, doc.text, rule.flags):
            if m.start() == m.end():
                continue
            spans.append(EntitySpan(
                span=CharSpan(m.start(), m.end()), label=rule.label,
                surface=m.group(), source="regex", confidence=1.0))
    spans.sort(key=lambda e: (e.start, e.end))
    return spans


# ---------------------------------------------------------------------------
# Whole-token occurrence scanning (shared by gazetteer and conventional)
# ---------------------------------------------------------------------------

def _token_boundaries(tokens: Sequence[DocToken]) -> tuple[set[int], set[int]]:
    starts = {t.span.start for t in tokens}
    ends = {t.span.end for t in tokens}
    return starts, ends


def whole_token_occurrences(text: str, surface: str,
                            starts: set[int], ends: set[int]) -> list[CharSpan]:
    """Occurrences of a surface string that align with token boundaries."""
    found: list[CharSpan] = []
    if not surface:
        return found
    offset = text.find(surface)
    while offset != -1:
        end = offset + len(surface)
        if offset in starts and end in ends:
            found.append(CharSpan(offset, end))
        offset = text.find(surface, offset + 1)
    return found


# ---------------------------------------------------------------------------
# Gazetteer detector
# ---------------------------------------------------------------------------

def detect_gazetteer(doc: Document,
                     gazetteer: Mapping[str, Sequence[str]]
                     ) -> list[EntitySpan]:
    """Case-sensitive whole-token matches; the longer surface wins overlap."""
    tokens = doc_tokens(doc)
    starts, ends = _token_boundaries(tokens)
    candidates: list[EntitySpan] = []
    for label in sorted(gazetteer):
        for surface in gazetteer[label]:
            for span in whole_token_occurrences(doc.text, surface, starts, ends):
                candidates.append(EntitySpan(
                    span=span, label=label, surface=surface,
                    source="gazetteer", confidence=1.0))
    candidates.sort(key=lambda e: (-len(e.span), e.start, e.end, e.label))
    kept: list[EntitySpan] = []
    for cand in candidates:
        if all(not cand.span.overlaps(k.span) for k in kept):
            kept.append(cand)
    kept.sort(key=lambda e: (e.start, e.end))
    return kept


# ---------------------------------------------------------------------------
# Rubrum heuristic
# ---------------------------------------------------------------------------

def _rubrum_window(doc: Document, markers: Sequence[str],
                   warnings: list[str] | None) -> int:
    """End offset of the header section (party listing) of the ruling."""
    positions = [p for p in (doc.text.find(m) for m in markers) if p != -1]
    if positions:
        return min(positions)
    if warnings is not None:
        warnings.append(
            f"{doc.id}: no rubrum marker found; using the first quarter "
            f"of the document")
    return len(doc.text) // 4


def _is_punct(token: DocToken) -> bool:
    return not any(ch.isalnum() for ch in token.text)


def _candidate_before(tokens: Sequence[DocToken], cue_index: int,
                      text: str) -> tuple[int, int] | None:
    """Token range of the capitalized run preceding a role cue."""
    j = cue_index - 1
    while j >= 0 and _is_punct(tokens[j]):
        j -= 1
    last = j
    while (j >= 0 and tokens[j].text[:1].isupper()
           and tokens[j].text not in _CAP_STOPWORDS
           and not _is_punct(tokens[j])):
        j -= 1
    first = j + 1
    if first > last:
        return None
    return first, last


def detect_conventional(doc: Document, cfg: DetectorConfig,
                        warnings: list[str] | None = None
                        ) -> list[EntitySpan]:
    """Party names from the ruling header, propagated document-wide.

    Stage one cuts the header at the first section marker (or the first
    quarter of the text, with a warning).  Stage two takes the capitalized
    token run in front of each party-role cue as a candidate surface,
    labels it ORG when it contains a company-form word and PER otherwise,
    then spans every whole-token occurrence of that surface in the whole
    document.
    """
    markers = cfg.rubrum_markers.get(doc.language, ())
    if not markers:
        raise InvalidConfig(
            f"no rubrum markers configured for language {doc.language!r}")
    cues = cfg.role_cues.get(doc.language, ())
    rubrum_end = _rubrum_window(doc, markers, warnings)
    tokens = doc_tokens(doc)
    starts, ends = _token_boundaries(tokens)

    surfaces: dict[str, str] = {}  # surface -> label, insertion ordered
    for i, token in enumerate(tokens):
        if token.span.start >= rubrum_end:
            break
        if not any(token.text.startswith(cue) for cue in cues):
            continue
        found = _candidate_before(tokens, i, doc.text)
        if found is None:
            continue
        first, last = found
        surface = doc.text[tokens[first].span.start:tokens[last].span.end]
        if len(surface) < 2 or not any(ch.isalpha() for ch in surface):
            continue
        run = [tokens[k].text for k in range(first, last + 1)]
        label = "ORG" if any(t in _LEGAL_FORMS for t in run) else "PER"
        surfaces.setdefault(surface, label)

    spans: list[EntitySpan] = []
    for surface, label in surfaces.items():
        for span in whole_token_occurrences(doc.text, surface, starts, ends):
            spans.append(EntitySpan(
                span=span, label=label, surface=surface,
                source="conventional", confidence=0.8))
    spans.sort(key=lambda e: (e.start, e.end))
    return spans


# ---------------------------------------------------------------------------
# Model detector (HTTP inference protocol)
# ---------------------------------------------------------------------------

def _post_json(endpoint: str, payload: dict, timeout_s: float) -> dict:
    body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
    request = urllib.request.Request(
        endpoint, data=body, method="POST",
        headers={"Content-Type": "application/json; charset=utf-8"})
    try:
        with urllib.request.urlopen(request, timeout=timeout_s) as response:
            raw = response.read()
    except (urllib.error.URLError, socket.timeout, ConnectionError, OSError) as exc:
        raise DetectorUnavailable(
            f"inference endpoint {endpoint} unreachable: {exc}") from exc
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolViolation(
            f"inference endpoint returned non-JSON: {exc}") from exc


def _merge_center_wins(n_tokens: int, windows: Sequence[tuple[int, int]],
                       rows: Sequence[Sequence[float]],
                       default: float) -> list[float]:
    values = [default] * n_tokens
    best: list[tuple[float, int] | None] = [None] * n_tokens
    for order, ((w_start, w_end), row) in enumerate(zip(windows, rows)):
        center = (w_start + w_end - 1) / 2
        for offset, value in enumerate(row):
            idx = w_start + offset
            key = (abs(center - idx), order)
            if best[idx] is None or key < best[idx]:
                best[idx] = key
                values[idx] = value
    return values


def detect_model(doc: Document, endpoint: str, timeout_ms: int = 5000, *,
                 max_seq_len: int = 192, stride_ratio: float = 0.5,
                 warnings: list[str] | None = None) -> list[EntitySpan]:
    """Label sentences through the external NER service, spans from tags.

    Sentences longer than max_seq_len travel as overlapping windows and
    are reassembled with the center-wins rule.  The response must return
    one label per request token; anything else is a protocol violation.
    A network failure raises DetectorUnavailable so the caller can keep
    the remaining detectors' output.
    """
    from .dataset import reconstruct_window_labels

    sentence_tokens: list[list[tuple[str, CharSpan]]] = []
    for s in doc.sentences:
        tokens = tokenize(doc.text[s.start:s.end], base=s.start)
        if tokens:
            sentence_tokens.append(tokens)
    if not sentence_tokens:
        return []

    # (sentence index, window) per request entry, in request order.
    plan: list[tuple[int, tuple[int, int]]] = []
    request_sentences = []
    for idx, tokens in enumerate(sentence_tokens):
        for window in chunk_windows(len(tokens), max_seq_len, stride_ratio):
            plan.append((idx, window))
            request_sentences.append(
                {"tokens": [t[0] for t in tokens[window[0]:window[1]]]})

    url = endpoint.rstrip("/") + "/v1/label"
    payload = {"language": doc.language, "sentences": request_sentences}
    response = _post_json(url, payload, timeout_ms / 1000.0)

    rows = response.get("sentences")
    if not isinstance(rows, list) or len(rows) != len(plan):
        got = len(rows) if isinstance(rows, list) else "no"
        raise ProtocolViolation(
            f"expected {len(plan)} labeled sentences, got {got}")
    labeled: dict[int, list[tuple[tuple[int, int], list[str], list[float]]]] = {}
    for entry, (idx, window), sent in zip(rows, plan, request_sentences):
        n = len(sent["tokens"])
        labels = entry.get("labels") if isinstance(entry, dict) else None
        if not isinstance(labels, list) or len(labels) != n:
            raise ProtocolViolation(
                f"label count {len(labels) if isinstance(labels, list) else 'none'} "
                f"does not match {n} request tokens")
        confidences = entry.get("confidences")
        if confidences is None:
            confidences = [1.0] * n
        elif not isinstance(confidences, list) or len(confidences) != n:
            raise ProtocolViolation(
                f"confidence count does not match {n} request tokens")
        labeled.setdefault(idx, []).append(
            (window, [str(t) for t in labels], [float(c) for c in confidences]))

    spans: list[EntitySpan] = []
    for idx, tokens in enumerate(sentence_tokens):
        parts = labeled.get(idx, [])
        windows = [p[0] for p in parts]
        tags = reconstruct_window_labels(
            len(tokens), windows, [p[1] for p in parts])
        confidence = _merge_center_wins(
            len(tokens), windows, [p[2] for p in parts], 1.0)
        for t0, t1, label in extract_spans(tags, warnings):
            span = CharSpan(tokens[t0][1].start, tokens[t1 - 1][1].end)
            conf = min(1.0, max(0.0, fmean(confidence[t0:t1])))
            spans.append(EntitySpan(
                span=span, label=label, surface=doc.text[span.start:span.end],
                source="model", confidence=conf))
    spans.sort(key=lambda e: (e.start, e.end))
    return spans


# ---------------------------------------------------------------------------
# Merge
# ---------------------------------------------------------------------------

def merge(results: Iterable[Sequence[EntitySpan]],
          policy: Sequence[str] = SOURCE_PRIORITY) -> list[EntitySpan]:
    """Resolve overlaps across detector outputs into one sorted list.

    Higher-priority source wins; at equal priority the longer span, then
    the earlier one.  The output is non-overlapping and sorted by offset,
    whatever order the inputs arrive in.
    """
    rank = {source: i for i, source in enumerate(policy)}
    candidates = [span for result in results for span in result]
    candidates.sort(key=lambda e: (
        rank.get(e.source, len(policy)), -len(e.span), e.start, e.end,
        e.label, e.source))
    kept: list[EntitySpan] = []
    for cand in candidates:
        if all(not cand.span.overlaps(k.span) for k in kept):
            kept.append(cand)
    kept.sort(key=lambda e: (e.start, e.end))
    return kept


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

DETECTOR_NAMES = ("regex", "gazetteer", "conventional", "model")


@dataclass(frozen=True)
class DetectionResult:
    spans: tuple[EntitySpan, ...]
    detectors: Mapping[str, Mapping[str, object]]  # name -> {count, seconds}
    warnings: tuple[str, ...]
    unavailable: Mapping[str, str]  # detector name -> failure message


def run_detectors(doc: Document, cfg: DetectorConfig,
                  detectors: Sequence[str] | None = None) -> DetectionResult:
    """Run the requested detectors concurrently and merge their spans.

    An unreachable model endpoint is recorded, not raised; its absence is
    visible in the result.  Spans below min_confidence are dropped before
    the merge.  The merged output does not depend on completion order.
    """
    if detectors is None:
        names = [n for n in DETECTOR_NAMES
                 if n != "model" or cfg.model_endpoint]
    else:
        names = list(detectors)
        for name in names:
            if name not in DETECTOR_NAMES:
                raise InvalidConfig(f"unknown detector {name!r}")
        if "model" in names and not cfg.model_endpoint:
            raise InvalidConfig("model detector requested without an endpoint")

    warnings: list[str] = []

    def run_one(name: str) -> list[EntitySpan]:
        if name == "regex":
            return detect_regex(doc, cfg.regex_rules)
        if name == "gazetteer":
            return detect_gazetteer(doc, cfg.gazetteer)
        if name == "conventional":
            return detect_conventional(doc, cfg, warnings)
        return detect_model(doc, cfg.model_endpoint, cfg.timeout_ms,
                            warnings=warnings)

    outputs: dict[str, list[EntitySpan]] = {}
    timings: dict[str, float] = {}
    unavailable: dict[str, str] = {}
    with ThreadPoolExecutor(max_workers=max(1, len(names))) as pool:
        started = {name: (time.perf_counter(), pool.submit(run_one, name))
                   for name in names}
        for name in names:  # fixed order, not completion order
            t0, future = started[name]
            try:
                outputs[name] = future.result()
            except DetectorUnavailable as exc:
                outputs[name] = []
                unavailable[name] = str(exc)
            timings[name] = time.perf_counter() - t0

    filtered = {
        name: [s for s in spans if s.confidence >= cfg.min_confidence]
        for name, spans in outputs.items()
    }
    merged = merge([filtered[name] for name in names])
    detectors_info = {
        name: {"count": len(filtered[name]),
               "seconds": round(timings[name], 6)}
        for name in names
    }
    return DetectionResult(
        spans=tuple(merged), detectors=detectors_info,
        warnings=tuple(warnings), unavailable=unavailable)
