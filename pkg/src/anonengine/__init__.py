"""Detection, review, and redaction of personal data in court rulings."""

from .corpus import (CharSpan, Document, EntitySpan, LabelSet, attach_gold,
                     ingest_text, read_documents_jsonl, write_documents_jsonl)
from .dataset import (PrepConfig, TrainingExample, chunk_windows, corpus_stats,
                      doc_tokens, prepare_corpus, sample_negatives,
                      sentence_examples, split_corpus, to_iob2, tokenize)
from .detectors import (DetectionResult, DetectorConfig, RegexRule,
                        detect_conventional, detect_gazetteer, detect_model,
                        detect_regex, merge, run_detectors)
from .errors import (DetectorUnavailable, EmptyDocument, EngineError,
                     InsufficientCorpus, IntegrityError, InvalidConfig,
                     MissingReplacement, NotFound, OverlapConflict,
                     OverlapError, ProtocolViolation, SpanOutOfBounds,
                     UnknownLabel, ValidationError, VersionConflict)
from .evaluate import (ConditionEvaluation, EvalReport, LabelMetrics,
                       evaluate_conditions, extract_spans, format_table,
                       score)
from .project import (Project, ProjectStore, Suggestion, add_manual,
                      add_suggestions, apply_decision, create_project, load,
                      replay_audit, save)
from .redact import (AnonymizedDocument, assign_placeholders,
                     letter_placeholder, render, render_html,
                     restore_original)
from .sentences import segment_sentences
from .uniformize import UniformizeConfig, surface_index, uniformize

__version__ = "0.1.0"

__all__ = [
    "AnonymizedDocument", "CharSpan", "ConditionEvaluation",
    "DetectionResult", "DetectorConfig", "DetectorUnavailable", "Document",
    "EmptyDocument", "EngineError", "EntitySpan", "EvalReport",
    "InsufficientCorpus", "IntegrityError", "InvalidConfig", "LabelMetrics",
    "LabelSet", "MissingReplacement", "NotFound", "OverlapConflict",
    "OverlapError", "PrepConfig", "Project", "ProjectStore",
    "ProtocolViolation", "RegexRule", "SpanOutOfBounds", "Suggestion",
    "TrainingExample", "UniformizeConfig", "UnknownLabel", "ValidationError",
    "VersionConflict", "add_manual", "add_suggestions", "apply_decision",
    "assign_placeholders", "attach_gold", "chunk_windows", "corpus_stats",
    "create_project", "detect_conventional", "detect_gazetteer",
    "detect_model", "detect_regex", "doc_tokens", "evaluate_conditions",
    "extract_spans", "format_table", "ingest_text", "letter_placeholder",
    "load", "merge", "prepare_corpus", "read_documents_jsonl", "render",
    "render_html", "replay_audit", "restore_original", "sample_negatives",
    "save", "score", "segment_sentences", "sentence_examples",
    "split_corpus", "surface_index", "to_iob2", "tokenize", "uniformize",
    "write_documents_jsonl",
]
