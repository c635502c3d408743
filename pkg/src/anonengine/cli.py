"""Command line interface.

Exit codes: 0 success, 1 validation problem in the input, 2 I/O problem.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import errors
from .corpus import read_documents_jsonl
from .dataset import PrepConfig, corpus_stats, prepare_corpus, write_examples_jsonl
from .detectors import DetectorConfig, run_detectors
from .evaluate import (entity_token_spans, evaluation_to_dict, format_table,
                       report_to_dict, score)
from .project import ProjectStore, load
from .redact import render, render_html
from .uniformize import UniformizeConfig, uniformize


def _add_prep(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("prep", help="turn a gold corpus into training data")
    p.add_argument("--corpus", required=True, help="documents JSONL")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--max-len", type=int, default=192)
    p.add_argument("--stride-ratio", type=float, default=0.5)
    p.add_argument("--neg-ratio", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negatives-global", action="store_true",
                   help="sample negatives over all languages together")


def _add_detect(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("detect", help="suggest entity spans for documents")
    p.add_argument("--corpus", required=True, help="documents JSONL")
    p.add_argument("--out", required=True, help="suggestions JSONL")
    p.add_argument("--detectors", default=None,
                   help="comma list, e.g. regex,conventional")
    p.add_argument("--model-endpoint", default=None)
    p.add_argument("--timeout-ms", type=int, default=5000)
    p.add_argument("--min-confidence", type=float, default=0.0)


def _add_uniformize(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("uniformize",
                       help="propagate detected surfaces document-wide")
    p.add_argument("--corpus", required=True, help="documents JSONL")
    p.add_argument("--suggestions", required=True, help="suggestions JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--case-insensitive", action="store_true")
    p.add_argument("--min-surface-len", type=int, default=2)


def _add_redact(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("redact", help="render a project's anonymized ruling")
    p.add_argument("--project", required=True, help="project file")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("txt", "html"), default="txt")


def _add_eval(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True, help="documents JSONL with gold")
    p.add_argument("--pred", required=True, help="suggestions JSONL")
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--uniformized", action="store_true",
                   help="also score after surface propagation")


def _add_serve(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("serve", help="start the review HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("ANONENGINE_PORT", "8000")))
    p.add_argument("--project-dir",
                   default=os.environ.get("ANONENGINE_PROJECT_DIR",
                                          "./projects"))
    p.add_argument("--model-endpoint", default=None)


def _add_stats(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("stats", help="corpus size distributions")
    p.add_argument("--corpus", required=True, help="documents JSONL")
    p.add_argument("--out", default=None, help="write JSON here (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonengine",
        description="Detect, review, and redact personal data in court "
                    "rulings.")
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_prep, _add_detect, _add_uniformize, _add_redact,
                _add_eval, _add_serve, _add_stats):
        add(sub)
    return parser


def _read_corpus(path: str) -> list:
    return list(read_documents_jsonl(path))


def _read_suggestions(path: str):
    """Suggestions JSONL -> {doc_id: [EntitySpan]].

    Spans are rebuilt against the corpus text by the caller, so here we
    keep raw records grouped per document.
    """
    from .corpus import CharSpan, EntitySpan

    grouped: dict[str, list] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                doc_id = str(record["doc_id"])
                span = CharSpan(int(record["start"]), int(record["end"]))
                ent = EntitySpan(
                    span=span, label=str(record["label"]),
                    surface=str(record["surface"]),
                    source=str(record.get("source", "model")),
                    confidence=float(record.get("confidence", 1.0)))
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise errors.ValidationError(
                    f"{path}:{lineno}: bad suggestion record ({exc})") from exc
            grouped.setdefault(doc_id, []).append(ent)
    return grouped


def _suggestion_record(doc_id: str, ent) -> dict:
    return {"doc_id": doc_id, "start": ent.start, "end": ent.end,
            "label": ent.label, "surface": ent.surface,
            "source": ent.source, "confidence": ent.confidence}


def _cmd_prep(args: argparse.Namespace) -> int:
    docs = _read_corpus(args.corpus)
    cfg = PrepConfig(
        max_seq_len=args.max_len,
        truncation_stride_ratio=args.stride_ratio,
        neg_to_pos_ratio=args.neg_ratio,
        rng_seed=args.seed,
        negatives_per_language=not args.negatives_global)
    warnings: list[str] = []
    splits = prepare_corpus(docs, cfg, warnings)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, examples in splits.items():
        write_examples_jsonl(examples, out_dir / f"{name}.jsonl")
    stats = corpus_stats(docs)
    (out_dir / "stats.json").write_text(
        json.dumps(stats, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    counts = {name: len(examples) for name, examples in splits.items()}
    print(json.dumps({"examples": counts, "out_dir": str(out_dir)}))
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    docs = _read_corpus(args.corpus)
    if not docs:
        raise errors.ValidationError(f"{args.corpus}: no documents")
    cfg = DetectorConfig(model_endpoint=args.model_endpoint,
                         timeout_ms=args.timeout_ms,
                         min_confidence=args.min_confidence)
    names = None
    if args.detectors:
        names = [n.strip() for n in args.detectors.split(",") if n.strip()]
    total = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for doc in docs:
            result = run_detectors(doc, cfg, names)
            for name, message in result.unavailable.items():
                print(f"warning: {doc.id}: {name} unavailable: {message}",
                      file=sys.stderr)
            for w in result.warnings:
                print(f"warning: {w}", file=sys.stderr)
            for ent in result.spans:
                out.write(json.dumps(_suggestion_record(doc.id, ent),
                                     ensure_ascii=False, sort_keys=True))
                out.write("\n")
                total += 1
    print(json.dumps({"documents": len(docs), "suggestions": total}))
    return 0


def _cmd_uniformize(args: argparse.Namespace) -> int:
    docs = {d.id: d for d in _read_corpus(args.corpus)}
    grouped = _read_suggestions(args.suggestions)
    cfg = UniformizeConfig(case_sensitive=not args.case_insensitive,
                           min_surface_len=args.min_surface_len)
    total = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for doc_id in sorted(grouped):
            if doc_id not in docs:
                raise errors.ValidationError(
                    f"suggestions reference unknown document {doc_id!r}")
            expanded = uniformize(docs[doc_id], grouped[doc_id], cfg)
            for ent in expanded:
                out.write(json.dumps(_suggestion_record(doc_id, ent),
                                     ensure_ascii=False, sort_keys=True))
                out.write("\n")
                total += 1
    print(json.dumps({"documents": len(grouped), "suggestions": total}))
    return 0


def _cmd_redact(args: argparse.Namespace) -> int:
    project = load(args.project)
    accepted = [s.entity for s in project.accepted]
    mapping = project.replacement_map()
    anonymized = render(project.document, accepted, mapping)
    if args.format == "txt":
        Path(args.out).write_text(anonymized.text, encoding="utf-8")
    else:
        surface_ids = {s.entity.surface: s.id for s in project.accepted}
        Path(args.out).write_text(render_html(anonymized, surface_ids),
                                  encoding="utf-8")
    print(json.dumps({"document": project.document.id,
                      "replacements": len(anonymized.replacements),
                      "out": args.out}))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    docs = _read_corpus(args.gold)
    grouped = _read_suggestions(args.pred)
    warnings: list[str] = []
    gold = set()
    pred = set()
    uni_pred = set()
    for doc in docs:
        gold |= entity_token_spans(doc, doc.gold, warnings)
        ents = grouped.get(doc.id, [])
        pred |= entity_token_spans(doc, ents, warnings)
        if args.uniformized:
            expanded = uniformize(doc, ents, UniformizeConfig())
            uni_pred |= entity_token_spans(doc, expanded, warnings)
    normal = score(gold, pred, condition="normal", warnings=warnings)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.uniformized:
        uniformized = score(gold, uni_pred, condition="uniformized",
                            warnings=warnings)
        if args.format == "table":
            print(format_table([("predictions", normal, uniformized)]))
        else:
            print(json.dumps({
                "normal": report_to_dict(normal),
                "uniformized": report_to_dict(uniformized),
            }, ensure_ascii=False, indent=2, sort_keys=True))
    else:
        if args.format == "table":
            print(format_table([("predictions", normal, None)]))
        else:
            print(json.dumps(report_to_dict(normal), ensure_ascii=False,
                             indent=2, sort_keys=True))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    cfg = DetectorConfig(model_endpoint=args.model_endpoint)
    app = create_app(ProjectStore(args.project_dir), cfg)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    docs = _read_corpus(args.corpus)
    stats = corpus_stats(docs)
    rendered = json.dumps(stats, ensure_ascii=False, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(rendered + "\n", encoding="utf-8")
        print(json.dumps({"documents": stats["documents"], "out": args.out}))
    else:
        print(rendered)
    return 0


_COMMANDS = {
    "prep": _cmd_prep,
    "detect": _cmd_detect,
    "uniformize": _cmd_uniformize,
    "redact": _cmd_redact,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "stats": _cmd_stats,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (errors.ValidationError, errors.InvalidConfig,
            errors.EmptyDocument, errors.SpanOutOfBounds,
            errors.OverlapError, errors.InsufficientCorpus,
            errors.UnknownLabel, errors.IntegrityError,
            errors.MissingReplacement) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
