"""Command-line entry point for transcript-based reading-fluency scoring.

Usage examples:

    orfscore normalize story.txt
    orfscore wer --ref story.txt --hyp transcript.txt --percent
    orfscore score --story-words 117 --errors 8 --duration 60
    orfscore batch --manifest recordings.jsonl --backend files:./transcripts
    orfscore eval-transcription --manifest recordings.jsonl --format csv
    orfscore compare --results scores.csv
    orfscore report --manifest recordings.jsonl --format md --alignments

Two commands embody the two reference conventions on purpose: ``batch``
scores transcripts against the original story text (the oral-reading
protocol), while ``eval-transcription`` scores ASR output against the
human transcript (transcription accuracy). Logs go to standard error;
data goes to standard output or ``--out``. Exit codes: 0 success, 2
usage or validation failure, 3 backend failure / nothing scored.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .align import EmptyReferenceError, align, count_reading_errors, wer
from .ingest import (
    AsrBackend,
    BackendError,
    ManifestError,
    RecordingRecord,
    fetch_transcripts,
    load_manifest,
    parse_backend_spec,
)
from .report import ScoreRow, emit_summary, parse_summary_rows, render_alignment
from .score import agreement, wcpm_from_errors, wcpm_from_wer
from .textnorm import normalize, render

log = logging.getLogger("orfscore")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BACKEND = 3

BACKEND_ENV_VAR = "ORF_BACKEND"


@dataclass
class RunConfig:
    """Validated batch-run settings, resolved before any file I/O."""

    backend: AsrBackend | None = None
    parallelism: int = 4
    retries: int = 0

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        spec = getattr(args, "backend", None) or os.environ.get(BACKEND_ENV_VAR)
        backend = parse_backend_spec(spec) if spec else None
        parallelism = getattr(args, "parallelism", 4)
        if parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {parallelism}")
        retries = getattr(args, "retries", 0)
        if retries < 0:
            raise ValueError(f"retries must be >= 0, got {retries}")
        return cls(backend=backend, parallelism=parallelism, retries=retries)


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _score_record(
    rec: RecordingRecord,
    asr_text: str | BackendError | None,
    with_alignment: bool,
) -> ScoreRow:
    """Score one recording; failures land in the row's error field."""
    row = ScoreRow(id=rec.id)
    notes: list[str] = []
    story = normalize(rec.reference_text)
    if not story:
        row.error = "reference text contains no words"
        return row

    if isinstance(asr_text, BackendError):
        notes.append(str(asr_text))
    elif asr_text is not None:
        hyp = normalize(asr_text)
        breakdown = wer(story, hyp)
        row.wer_percent = breakdown.wer_percent
        row.wcpm_auto = wcpm_from_wer(
            len(story), breakdown.wer_fraction, rec.duration_seconds
        ).wcpm
        if with_alignment:
            row.alignment_markup = render_alignment(
                align(story, hyp), story, hyp, "plain"
            )

    if rec.human_error_count is not None:
        row.wcpm_human = wcpm_from_errors(
            len(story), rec.human_error_count, rec.duration_seconds
        ).wcpm
    elif rec.human_transcript is not None:
        errors = count_reading_errors(story, normalize(rec.human_transcript))
        row.wcpm_human = wcpm_from_errors(
            len(story), errors, rec.duration_seconds
        ).wcpm

    if row.wcpm_auto is None and row.wcpm_human is None and not notes:
        notes.append("no transcript or human error count available")
    if notes:
        row.error = "; ".join(notes)
    return row


def _score_records(
    records: list[RecordingRecord],
    config: RunConfig,
    with_alignments: bool = False,
) -> list[ScoreRow]:
    """Score a manifest's records; rows come back sorted by record id."""
    ordered = sorted(records, key=lambda r: r.id)
    asr_texts: dict[str, str | BackendError | None] = {}
    if config.backend is not None:
        fetched = fetch_transcripts(
            ordered, config.backend, config.parallelism, config.retries
        )
        for rec_id, outcome in fetched.items():
            asr_texts[rec_id] = (
                outcome if isinstance(outcome, BackendError) else outcome.content
            )
    else:
        for rec in ordered:
            asr_texts[rec.id] = rec.asr_transcript

    rows = []
    for index, rec in enumerate(ordered, 1):
        try:
            row = _score_record(rec, asr_texts.get(rec.id), with_alignments)
        except (EmptyReferenceError, ValueError) as exc:
            row = ScoreRow(id=rec.id, error=str(exc))
        rows.append(row)
        log.info("processed %s (%d/%d)", rec.id, index, len(ordered))
    return rows


def _emit_rows(rows: list[ScoreRow], args: argparse.Namespace, **kwargs) -> int:
    _write_output(emit_summary(rows, args.format, **kwargs), args.out)
    scored = sum(
        1 for r in rows if r.wcpm_auto is not None or r.wcpm_human is not None
    )
    failed = sum(1 for r in rows if r.error)
    if failed:
        log.warning("%d of %d records failed to score", failed, len(rows))
    return EXIT_OK if scored else EXIT_BACKEND


def cmd_normalize(args: argparse.Namespace) -> int:
    for path in args.paths:
        tokens = normalize(Path(path).read_text(encoding="utf-8"))
        print(render(tokens))
    return EXIT_OK


def cmd_wer(args: argparse.Namespace) -> int:
    reference = normalize(Path(args.ref).read_text(encoding="utf-8"))
    hypothesis = normalize(Path(args.hyp).read_text(encoding="utf-8"))
    breakdown = wer(reference, hypothesis)
    if args.json:
        print(
            json.dumps(
                {
                    "wer_fraction": breakdown.wer_fraction,
                    "wer_percent": breakdown.wer_percent,
                    "insertions": breakdown.insertions,
                    "deletions": breakdown.deletions,
                    "substitutions": breakdown.substitutions,
                    "matches": breakdown.matches,
                    "ref_len": breakdown.ref_len,
                }
            )
        )
    else:
        shown = (
            f"{breakdown.wer_percent:.1f}%"
            if args.percent
            else f"{breakdown.wer_fraction:.4f}"
        )
        print(
            f"wer={shown} insertions={breakdown.insertions} "
            f"deletions={breakdown.deletions} "
            f"substitutions={breakdown.substitutions} "
            f"matches={breakdown.matches} ref_len={breakdown.ref_len}"
        )
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    if args.errors is not None:
        result = wcpm_from_errors(args.story_words, args.errors, args.duration)
    else:
        result = wcpm_from_wer(args.story_words, args.wer, args.duration)
    if args.json:
        print(json.dumps(result.to_dict()))
    else:
        print(
            f"wcpm={result.wcpm:.1f} words_correct={result.words_correct:.1f} "
            f"method={result.method.value}"
        )
    return EXIT_OK


def cmd_batch(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    records = load_manifest(args.manifest)
    if not records:
        raise ManifestError(f"{args.manifest}: manifest contains no records")
    return _emit_rows(_score_records(records, config), args)


def cmd_eval_transcription(args: argparse.Namespace) -> int:
    records = load_manifest(args.manifest)
    eligible = [
        r
        for r in records
        if r.human_transcript is not None and r.asr_transcript is not None
    ]
    skipped = len(records) - len(eligible)
    if skipped:
        log.warning("skipped %d records lacking a transcript", skipped)
    if not eligible:
        print("no comparable records", file=sys.stderr)
        return EXIT_VALIDATION
    rows = []
    for rec in sorted(eligible, key=lambda r: r.id):
        try:
            breakdown = wer(
                normalize(rec.human_transcript), normalize(rec.asr_transcript)
            )
            rows.append(ScoreRow(id=rec.id, wer_percent=breakdown.wer_percent))
        except EmptyReferenceError as exc:
            rows.append(ScoreRow(id=rec.id, error=str(exc)))
    _write_output(emit_summary(rows, args.format), args.out)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    rows = parse_summary_rows(Path(args.results).read_text(encoding="utf-8"))
    pairs = [
        (row["wcpm_human"], row["wcpm_auto"])
        for row in rows
        if row.get("wcpm_human") is not None and row.get("wcpm_auto") is not None
    ]
    if len(pairs) < 2:
        print(
            "need at least 2 recordings scored by both methods, "
            f"found {len(pairs)}",
            file=sys.stderr,
        )
        return EXIT_VALIDATION
    stats = agreement([p[0] for p in pairs], [p[1] for p in pairs])
    if args.json:
        print(
            json.dumps(
                {
                    "count": stats.count,
                    "mean_wcpm_human": stats.mean_a,
                    "mean_wcpm_auto": stats.mean_b,
                    "pearson_r": stats.pearson_r,
                    "mean_abs_diff": stats.mean_abs_diff,
                }
            )
        )
    else:
        print(f"count={stats.count}")
        print(f"mean_wcpm_human={stats.mean_a:.1f}")
        print(f"mean_wcpm_auto={stats.mean_b:.1f}")
        print(f"pearson_r={stats.pearson_r:.3f}")
        print(f"mean_abs_diff={stats.mean_abs_diff:.1f}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    records = load_manifest(args.manifest)
    if not records:
        raise ManifestError(f"{args.manifest}: manifest contains no records")
    rows = _score_records(records, config, with_alignments=args.alignments)
    return _emit_rows(rows, args, with_alignments=args.alignments)


def _add_batch_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", required=True, help="JSONL manifest path")
    parser.add_argument(
        "--backend",
        help="ASR backend spec: files:DIR, command:TEMPLATE, or http:URL "
        f"(defaults to ${BACKEND_ENV_VAR})",
    )
    parser.add_argument(
        "--format", choices=("csv", "json", "md"), default="csv"
    )
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument(
        "--parallelism", type=int, default=4, help="concurrent backend fetches"
    )
    parser.add_argument(
        "--retries", type=int, default=0, help="retry failed backend fetches"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orfscore",
        description="Score oral reading fluency from transcripts",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="print normalized tokens, one line per file")
    p.add_argument("paths", nargs="+", help="plain-text files, UTF-8")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("wer", help="word error rate between two text files")
    p.add_argument("--ref", required=True, help="reference text file")
    p.add_argument("--hyp", required=True, help="hypothesis text file")
    p.add_argument("--percent", action="store_true", help="show WER as a percent")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_wer)

    p = sub.add_parser("score", help="compute one WCPM score")
    p.add_argument("--story-words", type=int, required=True)
    p.add_argument("--duration", type=float, required=True, help="seconds")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--errors", type=int, help="rater error tally")
    group.add_argument("--wer", type=float, help="WER fraction")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser(
        "batch", help="score every recording in a manifest against its story"
    )
    _add_batch_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser(
        "eval-transcription",
        help="WER of ASR transcripts against human transcripts",
    )
    p.add_argument("--manifest", required=True, help="JSONL manifest path")
    p.add_argument("--format", choices=("csv", "json", "md"), default="csv")
    p.add_argument("--out", help="write output here instead of stdout")
    p.set_defaults(func=cmd_eval_transcription)

    p = sub.add_parser(
        "compare", help="agreement between human and automated WCPM scores"
    )
    p.add_argument("--results", required=True, help="batch output file (csv or json)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser(
        "report", help="score summary, optionally with marked-up alignments"
    )
    _add_batch_flags(p)
    p.add_argument(
        "--alignments",
        action="store_true",
        help="include error-marked alignment per recording",
    )
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ManifestError, EmptyReferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
