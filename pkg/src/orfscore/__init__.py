"""Deterministic scoring of oral reading fluency from transcripts.

The pipeline: normalize raw text into word tokens, align a spoken
transcript against its reference text, derive word error rate and
words-correct-per-minute, and aggregate scores across a cohort of
recordings with agreement statistics between scoring methods.
"""

from .align import (
    Alignment,
    AlignmentOp,
    EmptyReferenceError,
    OpKind,
    WerBreakdown,
    align,
    count_reading_errors,
    wer,
)
from .ingest import (
    AsrBackend,
    BackendError,
    ExternalCommandBackend,
    HttpEndpointBackend,
    ManifestError,
    RecordingRecord,
    TranscriptFilesBackend,
    WavFormatError,
    fetch_transcript,
    fetch_transcripts,
    fetch_with_retries,
    load_manifest,
    parse_backend_spec,
    probe_wav_duration,
    write_manifest,
)
from .report import (
    AlignmentRendering,
    Mark,
    RenderSegment,
    ScoreRow,
    SummaryTable,
    build_rendering,
    emit_summary,
    parse_summary_rows,
    render_alignment,
)
from .score import (
    AgreementStats,
    CohortSummary,
    ScoringMethod,
    WcpmScore,
    agreement,
    mean_abs_diff,
    pearson,
    summarize,
    wcpm_from_errors,
    wcpm_from_wer,
)
from .textnorm import RawText, SourceKind, TokenSequence, normalize, render, token_count

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "AlignmentOp",
    "AlignmentRendering",
    "AgreementStats",
    "AsrBackend",
    "BackendError",
    "CohortSummary",
    "EmptyReferenceError",
    "ExternalCommandBackend",
    "HttpEndpointBackend",
    "ManifestError",
    "Mark",
    "OpKind",
    "RawText",
    "RecordingRecord",
    "RenderSegment",
    "ScoreRow",
    "ScoringMethod",
    "SourceKind",
    "SummaryTable",
    "TokenSequence",
    "TranscriptFilesBackend",
    "WavFormatError",
    "WcpmScore",
    "WerBreakdown",
    "agreement",
    "align",
    "build_rendering",
    "count_reading_errors",
    "emit_summary",
    "fetch_transcript",
    "fetch_transcripts",
    "fetch_with_retries",
    "load_manifest",
    "mean_abs_diff",
    "normalize",
    "parse_backend_spec",
    "parse_summary_rows",
    "pearson",
    "probe_wav_duration",
    "render",
    "render_alignment",
    "summarize",
    "token_count",
    "wcpm_from_errors",
    "wcpm_from_wer",
    "wer",
    "write_manifest",
]
