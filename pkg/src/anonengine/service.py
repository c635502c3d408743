"""HTTP service for the review workflow.

Thin JSON layer over the project store and the detector/uniformizer/
redactor modules.  Every mutation is persisted before the response goes
out, so a restart loses nothing.
"""
from __future__ import annotations

import json
from importlib import resources
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from . import errors
from .corpus import attach_gold, ingest_text
from .detectors import DetectorConfig, merge, run_detectors
from .evaluate import entity_token_spans, report_to_dict, score
from .project import Project, ProjectStore, add_manual, add_suggestions, \
    apply_decision, create_project
from .redact import render, render_html
from .uniformize import UniformizeConfig, uniformize


class GoldSpan(BaseModel):
    start: int
    end: int
    label: str


class CreateDocumentBody(BaseModel):
    text: str
    language: str
    id: Optional[str] = None
    gold: list[GoldSpan] = Field(default_factory=list)


class DecisionBody(BaseModel):
    decision: str
    version: int
    replacement: Optional[str] = None
    actor: str = "reviewer"


class ManualSpanBody(BaseModel):
    start: int
    end: int
    label: str
    replacement: str
    version: int
    actor: str = "reviewer"


class UniformizeBody(BaseModel):
    version: int
    surfaces: Optional[list[str]] = None


def _suggestion_json(s) -> dict:
    return {
        "id": s.id,
        "start": s.entity.start,
        "end": s.entity.end,
        "label": s.entity.label,
        "surface": s.entity.surface,
        "source": s.entity.source,
        "confidence": s.entity.confidence,
        "replacement": s.replacement,
        "status": s.status,
        "decided_by": s.decided_by,
        "decided_at": s.decided_at,
    }


def _document_order(project: Project) -> list:
    return sorted(project.suggestions,
                  key=lambda s: (s.entity.start, s.entity.end, s.id))


def _project_json(project: Project) -> dict:
    doc = project.document
    return {
        "id": doc.id,
        "language": doc.language,
        "version": project.version,
        "text": doc.text,
        "sentences": [[s.start, s.end] for s in doc.sentences],
        "has_gold": bool(doc.gold),
        "suggestions": [_suggestion_json(s) for s in _document_order(project)],
    }


def create_app(store: ProjectStore,
               detector_cfg: DetectorConfig | None = None) -> FastAPI:
    cfg = detector_cfg or DetectorConfig()
    app = FastAPI(title="anonengine")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])

    status_by_error = (
        (errors.NotFound, 404),
        (errors.VersionConflict, 409),
        (errors.ProtocolViolation, 502),
        (errors.DetectorUnavailable, 502),
        (errors.IntegrityError, 500),
        (errors.EngineError, 422),
    )

    def install_handler(exc_type, status: int) -> None:
        @app.exception_handler(exc_type)
        async def handler(request: Request, exc):  # noqa: ARG001
            return JSONResponse(status_code=status,
                                content={"detail": str(exc)})

    for exc_type, status in status_by_error:
        install_handler(exc_type, status)

    @app.post("/documents", status_code=201)
    def create_document(body: CreateDocumentBody):
        if body.id is not None and (":" in body.id or not body.id.strip()):
            raise errors.ValidationError(
                "document id must be non-empty and contain no colon")
        doc = ingest_text(body.text, body.language, doc_id=body.id)
        if body.gold:
            doc = attach_gold(doc, [(g.start, g.end, g.label)
                                    for g in body.gold])
        with store.lock(doc.id):
            if store.exists(doc.id):
                project = store.get(doc.id)
            else:
                project = create_project(doc)
                store.put(project)
        return _project_json(project)

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str):
        return _project_json(store.get(doc_id))

    @app.post("/documents/{doc_id}/detect")
    def detect(doc_id: str,
               detectors: Optional[str] = Query(default=None),
               version: Optional[int] = Query(default=None)):
        names = None
        if detectors:
            names = [n.strip() for n in detectors.split(",") if n.strip()]
        with store.lock(doc_id):
            project = store.get(doc_id)
            if version is not None and version != project.version:
                raise errors.VersionConflict(
                    f"detect based on version {version}, project is at "
                    f"{project.version}")
            result = run_detectors(project.document, cfg, names)
            project = add_suggestions(project, result.spans, actor="detector")
            store.put(project)
        payload = {
            "version": project.version,
            "suggestions": [_suggestion_json(s)
                            for s in _document_order(project)],
            "detectors": {k: dict(v) for k, v in result.detectors.items()},
            "warnings": list(result.warnings),
            "unavailable": dict(result.unavailable),
        }
        if result.unavailable:
            return JSONResponse(status_code=502, content=payload)
        return payload

    @app.post("/documents/{doc_id}/uniformize")
    def uniformize_document(doc_id: str, body: UniformizeBody):
        with store.lock(doc_id):
            project = store.get(doc_id)
            if body.version != project.version:
                raise errors.VersionConflict(
                    f"uniformize based on version {body.version}, project "
                    f"is at {project.version}")
            pool = [s.entity for s in project.suggestions
                    if s.status != "rejected"]
            if body.surfaces is not None:
                wanted = set(body.surfaces)
                pool = [e for e in pool if e.surface in wanted]
            spans = uniformize(project.document, merge([pool]),
                               UniformizeConfig())
            before = len(project.suggestions)
            project = add_suggestions(project, spans, actor="uniformizer")
            store.put(project)
            added = len(project.suggestions) - before
        return {
            "version": project.version,
            "added": added,
            "suggestions": [_suggestion_json(s)
                            for s in _document_order(project)],
        }

    @app.get("/documents/{doc_id}/suggestions")
    def list_suggestions(doc_id: str):
        project = store.get(doc_id)
        return {
            "version": project.version,
            "suggestions": [_suggestion_json(s)
                            for s in _document_order(project)],
        }

    @app.post("/suggestions/{suggestion_id}/decision")
    def decide(suggestion_id: str, body: DecisionBody):
        doc_id = suggestion_id.rsplit(":", 1)[0]
        normalized = {"accept": "accepted", "accepted": "accepted",
                      "reject": "rejected", "rejected": "rejected"}
        if body.decision not in normalized:
            raise errors.ValidationError(
                f"decision must be accept or reject, got {body.decision!r}")
        with store.lock(doc_id):
            project = store.get(doc_id)
            project = apply_decision(
                project, suggestion_id, normalized[body.decision],
                actor=body.actor, replacement=body.replacement,
                base_version=body.version)
            store.put(project)
        return {
            "version": project.version,
            "suggestion": _suggestion_json(project.suggestion(suggestion_id)),
        }

    @app.post("/documents/{doc_id}/manual-span")
    def manual_span(doc_id: str, body: ManualSpanBody):
        with store.lock(doc_id):
            project = store.get(doc_id)
            project = add_manual(
                project, body.start, body.end, body.label, body.replacement,
                actor=body.actor, base_version=body.version)
            store.put(project)
        new = _document_order(project)
        created = max(project.suggestions, key=lambda s: int(s.id.rsplit(":", 1)[1]))
        return {
            "version": project.version,
            "suggestion": _suggestion_json(created),
            "suggestions": [_suggestion_json(s) for s in new],
        }

    @app.get("/documents/{doc_id}/export")
    def export(doc_id: str, format: str = Query(default="txt")):
        project = store.get(doc_id)
        accepted = [s.entity for s in project.accepted]
        mapping = project.replacement_map()
        anonymized = render(project.document, accepted, mapping)
        if format == "txt":
            return PlainTextResponse(anonymized.text)
        if format == "html":
            surface_ids = {s.entity.surface: s.id for s in project.accepted}
            return HTMLResponse(render_html(anonymized, surface_ids))
        raise errors.ValidationError(
            f"format must be txt or html, got {format!r}")

    @app.get("/documents/{doc_id}/report")
    def report(doc_id: str):
        project = store.get(doc_id)
        doc = project.document
        if not doc.gold:
            raise errors.ValidationError(
                f"document {doc_id} carries no gold annotations")
        warnings: list[str] = []
        gold = entity_token_spans(doc, doc.gold, warnings)
        suggested = entity_token_spans(
            doc, [s.entity for s in project.suggestions], warnings)
        accepted = entity_token_spans(
            doc, [s.entity for s in project.accepted], warnings)
        return {
            "suggestions": report_to_dict(score(
                gold, suggested, condition="suggestions", warnings=warnings)),
            "accepted": report_to_dict(score(
                gold, accepted, condition="accepted", warnings=warnings)),
        }

    @app.get("/api-description")
    def api_description():
        raw = resources.files("anonengine.data").joinpath(
            "api_description.json").read_text("utf-8")
        return json.loads(raw)

    return app
