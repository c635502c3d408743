"""Review-session persistence: suggestions, decisions, audit log.

A project is the event-sourced review state for one ruling.  Every
mutation appends an audit event and bumps the version; replaying the
audit from the beginning reconstructs the same state, and the canonical
file form round-trips byte-exactly under an integrity checksum.
"""
from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import CharSpan, Document, EntitySpan, document_from_record, document_to_record
from .errors import (IntegrityError, NotFound, OverlapConflict,
                     SpanOutOfBounds, ValidationError, VersionConflict)
from .redact import letter_placeholder

log = logging.getLogger(__name__)

_STATUSES = ("pending", "accepted", "rejected")


def _now_iso(now: datetime | None = None) -> str:
    moment = now or datetime.now(timezone.utc)
    return moment.astimezone(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class Suggestion:
    id: str
    entity: EntitySpan
    replacement: str
    status: str = "pending"
    decided_by: str | None = None
    decided_at: str | None = None

    def __post_init__(self) -> None:
        if self.status not in _STATUSES:
            raise ValidationError(f"unknown status {self.status!r}")
        if self.status == "accepted" and not self.replacement:
            raise ValidationError(
                f"suggestion {self.id} accepted without a replacement")


@dataclass(frozen=True)
class AuditEvent:
    seq: int
    action: str
    at: str
    actor: str
    payload: Mapping[str, object]


@dataclass(frozen=True)
class Project:
    document: Document
    suggestions: tuple[Suggestion, ...] = ()
    replacement_policy: str = "letters"
    audit: tuple[AuditEvent, ...] = ()
    version: int = 0

    def suggestion(self, suggestion_id: str) -> Suggestion:
        for s in self.suggestions:
            if s.id == suggestion_id:
                return s
        raise NotFound(f"suggestion {suggestion_id!r} does not exist")

    @property
    def accepted(self) -> tuple[Suggestion, ...]:
        return tuple(s for s in self.suggestions if s.status == "accepted")

    def replacement_map(self) -> dict[str, str]:
        """Surface → placeholder pairs from accepted suggestions.

        First-occurrence order; if two accepted suggestions give one
        surface different replacements, the earliest wins; if two
        surfaces were given the same replacement, the later one gets a
        numeric suffix so the map stays injective.
        """
        ordered = sorted(self.accepted, key=lambda s: (s.entity.start,
                                                       s.entity.end))
        mapping: dict[str, str] = {}
        used: set[str] = set()
        for s in ordered:
            if s.entity.surface in mapping:
                continue
            placeholder = s.replacement
            suffix = 2
            while placeholder in used:
                log.warning(
                    "replacement %r assigned to two surfaces; %r gets a "
                    "numbered variant", s.replacement, s.entity.surface)
                placeholder = f"{s.replacement}{suffix}"
                suffix += 1
            mapping[s.entity.surface] = placeholder
            used.add(placeholder)
        return mapping


# ---------------------------------------------------------------------------
# Event application (the single source of state transitions)
# ---------------------------------------------------------------------------

def _entity_from_payload(payload: Mapping, text: str) -> EntitySpan:
    span = CharSpan(int(payload["start"]), int(payload["end"]))
    return EntitySpan(
        span=span, label=str(payload["label"]),
        surface=text[span.start:span.end],
        source=str(payload.get("source", "manual")),
        confidence=float(payload.get("confidence", 1.0)))


def _entity_payload(entity: EntitySpan) -> dict:
    return {"start": entity.start, "end": entity.end, "label": entity.label,
            "source": entity.source, "confidence": entity.confidence}


def apply_event(project: Project, event: AuditEvent) -> Project:
    """Fold one audit event into the project state."""
    if event.seq != project.version + 1:
        raise ValidationError(
            f"event seq {event.seq} does not follow version {project.version}")
    if event.action == "created":
        updated = project
    elif event.action == "suggestions_added":
        new = list(project.suggestions)
        for item in event.payload["suggestions"]:
            new.append(Suggestion(
                id=str(item["id"]),
                entity=_entity_from_payload(item, project.document.text),
                replacement=str(item.get("replacement", "")),
                status=str(item.get("status", "pending")),
                decided_by=item.get("decided_by"),
                decided_at=item.get("decided_at")))
        updated = replace(project, suggestions=tuple(new))
    elif event.action == "decision":
        target = str(event.payload["suggestion_id"])
        status = str(event.payload["status"])
        decided = []
        for s in project.suggestions:
            if s.id == target:
                decided.append(replace(
                    s, status=status,
                    replacement=str(event.payload.get(
                        "replacement", s.replacement)),
                    decided_by=event.actor, decided_at=event.at))
            else:
                decided.append(s)
        updated = replace(project, suggestions=tuple(decided))
    else:
        raise ValidationError(f"unknown audit action {event.action!r}")
    return replace(updated, audit=project.audit + (event,),
                   version=event.seq)


def replay_audit(document: Document, events: Iterable[AuditEvent],
                 replacement_policy: str = "letters") -> Project:
    """Rebuild a project purely from its audit trail."""
    project = Project(document=document,
                      replacement_policy=replacement_policy)
    for event in events:
        project = apply_event(project, event)
    return project


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def create_project(doc: Document, *, actor: str = "system",
                   replacement_policy: str = "letters",
                   now: datetime | None = None) -> Project:
    event = AuditEvent(seq=1, action="created", at=_now_iso(now),
                       actor=actor, payload={"document_id": doc.id})
    return apply_event(
        Project(document=doc, replacement_policy=replacement_policy), event)


def add_suggestions(project: Project, entities: Sequence[EntitySpan], *,
                    actor: str = "system",
                    now: datetime | None = None) -> Project:
    """Append detector output as pending suggestions, prefilled with
    letters-policy replacements.

    Entities already present as a suggestion (same offsets and label) are
    dropped so repeated detection runs do not duplicate the list.
    """
    known = {(s.entity.start, s.entity.end, s.entity.label)
             for s in project.suggestions}
    fresh = []
    for ent in sorted(entities, key=lambda e: (e.start, e.end, e.label)):
        key = (ent.start, ent.end, ent.label)
        if key in known:
            continue
        known.add(key)
        fresh.append(ent)
    if not fresh:
        return project

    # Prefill: surfaces keep their already assigned placeholder; new
    # surfaces continue the letter series.
    surface_to_placeholder: dict[str, str] = {}
    for s in project.suggestions:
        surface_to_placeholder.setdefault(s.entity.surface, s.replacement)
    taken = set(surface_to_placeholder.values())
    next_index = 0
    items = []
    seq_base = len(project.suggestions)
    for offset, ent in enumerate(fresh):
        if ent.surface in surface_to_placeholder:
            placeholder = surface_to_placeholder[ent.surface]
        else:
            while letter_placeholder(next_index) in taken:
                next_index += 1
            placeholder = letter_placeholder(next_index)
            next_index += 1
            surface_to_placeholder[ent.surface] = placeholder
            taken.add(placeholder)
        items.append({
            "id": f"{project.document.id}:{seq_base + offset}",
            "replacement": placeholder,
            **_entity_payload(ent),
        })
    event = AuditEvent(
        seq=project.version + 1, action="suggestions_added",
        at=_now_iso(now), actor=actor, payload={"suggestions": items})
    return apply_event(project, event)


def apply_decision(project: Project, suggestion_id: str, decision: str, *,
                   actor: str = "reviewer",
                   replacement: str | None = None,
                   base_version: int | None = None,
                   now: datetime | None = None) -> Project:
    """Accept or reject a suggestion.

    Allowed transitions: pending→accepted, pending→rejected, and flips
    between accepted and rejected (revisions are audited, not forbidden).
    With base_version given, the mutation only applies against the
    current version.
    """
    if base_version is not None and base_version != project.version:
        raise VersionConflict(
            f"decision based on version {base_version}, project is at "
            f"{project.version}")
    if decision not in ("accepted", "rejected"):
        raise ValidationError(f"unknown decision {decision!r}")
    current = project.suggestion(suggestion_id)
    if current.status == decision:
        raise ValidationError(
            f"suggestion {suggestion_id} is already {decision}")
    effective = replacement if replacement is not None else current.replacement
    if decision == "accepted" and not effective:
        raise ValidationError(
            f"cannot accept {suggestion_id} without a replacement")
    if decision == "accepted":
        for other in project.accepted:
            if (other.id != suggestion_id
                    and other.entity.span.overlaps(current.entity.span)):
                raise OverlapConflict(
                    f"suggestion {suggestion_id} overlaps accepted "
                    f"{other.id}")
    payload: dict[str, object] = {"suggestion_id": suggestion_id,
                                  "status": decision}
    if replacement is not None:
        payload["replacement"] = replacement
    event = AuditEvent(seq=project.version + 1, action="decision",
                       at=_now_iso(now), actor=actor, payload=payload)
    return apply_event(project, event)


def add_manual(project: Project, start: int, end: int, label: str,
               replacement: str, *, actor: str = "reviewer",
               base_version: int | None = None,
               now: datetime | None = None) -> Project:
    """Mark a span by hand; it is born accepted.

    The span must lie inside the document and not overlap any accepted
    suggestion.
    """
    if base_version is not None and base_version != project.version:
        raise VersionConflict(
            f"manual span based on version {base_version}, project is at "
            f"{project.version}")
    text = project.document.text
    if not (0 <= start < end <= len(text)):
        raise SpanOutOfBounds(
            f"manual span [{start},{end}) outside document of "
            f"length {len(text)}")
    if not label:
        raise ValidationError("manual span needs a label")
    if not replacement:
        raise ValidationError("manual span needs a replacement")
    span = CharSpan(start, end)
    for other in project.accepted:
        if other.entity.span.overlaps(span):
            raise OverlapConflict(
                f"manual span [{start},{end}) overlaps accepted {other.id}")
    item = {
        "id": f"{project.document.id}:{len(project.suggestions)}",
        "replacement": replacement,
        "status": "accepted",
        "decided_by": actor,
        "decided_at": _now_iso(now),
        "start": start, "end": end, "label": label,
        "source": "manual", "confidence": 1.0,
    }
    event = AuditEvent(
        seq=project.version + 1, action="suggestions_added",
        at=_now_iso(now), actor=actor, payload={"suggestions": [item]})
    return apply_event(project, event)


# ---------------------------------------------------------------------------
# Canonical persistence
# ---------------------------------------------------------------------------

def _suggestion_record(s: Suggestion) -> dict:
    return {
        "id": s.id,
        "entity": _entity_payload(s.entity),
        "replacement": s.replacement,
        "status": s.status,
        "decided_by": s.decided_by,
        "decided_at": s.decided_at,
    }


def project_to_record(project: Project) -> dict:
    return {
        "version": project.version,
        "document": document_to_record(project.document),
        "suggestions": [_suggestion_record(s) for s in project.suggestions],
        "replacement_policy": project.replacement_policy,
        "replacement_map": [
            [surface, placeholder]
            for surface, placeholder in project.replacement_map().items()
        ],
        "audit": [
            {"seq": e.seq, "action": e.action, "at": e.at,
             "actor": e.actor, "payload": e.payload}
            for e in project.audit
        ],
    }


def _canonical_bytes(record: dict) -> bytes:
    return json.dumps(record, ensure_ascii=False, sort_keys=True,
                      indent=2).encode("utf-8")


def save(project: Project, path: str | Path) -> None:
    """Write the canonical project file with an integrity checksum."""
    record = project_to_record(project)
    checksum = hashlib.sha256(_canonical_bytes(record)).hexdigest()
    record["checksum"] = checksum
    Path(path).write_bytes(_canonical_bytes(record) + b"\n")


def load(path: str | Path) -> Project:
    """Read and verify a project file, rebuilding state from the audit."""
    path = Path(path)
    try:
        record = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"{path}: unreadable project file ({exc})") from exc
    if not isinstance(record, dict) or "checksum" not in record:
        raise IntegrityError(f"{path}: missing checksum")
    stated = record.pop("checksum")
    actual = hashlib.sha256(_canonical_bytes(record)).hexdigest()
    if stated != actual:
        raise IntegrityError(
            f"{path}: checksum mismatch (file says {stated[:12]}…, "
            f"content is {actual[:12]}…)")
    document = document_from_record(record["document"], where=str(path))
    events = [AuditEvent(seq=int(e["seq"]), action=str(e["action"]),
                         at=str(e["at"]), actor=str(e["actor"]),
                         payload=e["payload"])
              for e in record["audit"]]
    project = replay_audit(document, events,
                           replacement_policy=record.get(
                               "replacement_policy", "letters"))
    if project.version != record.get("version"):
        raise IntegrityError(
            f"{path}: audit replays to version {project.version}, file "
            f"says {record.get('version')}")
    return project


class ProjectStore:
    """Directory of project files, one per document, with per-project
    locking so concurrent mutations of one project serialize."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _path(self, doc_id: str) -> Path:
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in doc_id)
        return self.directory / f"{safe}.json"

    def lock(self, doc_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(doc_id, threading.Lock())

    def exists(self, doc_id: str) -> bool:
        return self._path(doc_id).exists()

    def get(self, doc_id: str) -> Project:
        path = self._path(doc_id)
        if not path.exists():
            raise NotFound(f"no project for document {doc_id!r}")
        return load(path)

    def put(self, project: Project) -> None:
        save(project, self._path(project.document.id))

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))
