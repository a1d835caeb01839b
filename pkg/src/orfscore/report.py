"""Rendering of error-marked alignments and score summary tables.

Alignment renderings mark each reading error inline. The plain-text
grammar wraps insertions as ``{+word+}``, deletions as ``{-word-}``, and
substitutions as ``{~expected→spoken~}``; it is unambiguous because
normalized tokens never contain whitespace or braces. HTML output uses
``span`` elements with classes ``ins``/``del``/``sub``, and JSON carries
the segment list verbatim.

Summary tables list one row per recording plus footer rows with cohort
statistics. WER appears as a percent with one decimal, WCPM with one
decimal, and the correlation coefficient with three.
"""

from __future__ import annotations

import csv
import html
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .align import Alignment, OpKind
from .score import mean_abs_diff, pearson, summarize
from .textnorm import TokenSequence


class Mark(Enum):
    CORRECT = "correct"
    SUBSTITUTED = "substituted"
    INSERTED = "inserted"
    DELETED = "deleted"


_MARK_FOR_OP = {
    OpKind.MATCH: Mark.CORRECT,
    OpKind.SUBSTITUTION: Mark.SUBSTITUTED,
    OpKind.INSERTION: Mark.INSERTED,
    OpKind.DELETION: Mark.DELETED,
}

RENDER_FORMATS = ("plain", "html", "json")
SUMMARY_FORMATS = ("csv", "json", "md")


@dataclass(frozen=True)
class RenderSegment:
    """One marked-up token of a rendering; substitutions carry both the
    expected and the spoken word."""

    mark: Mark
    ref_text: str | None = None
    hyp_text: str | None = None

    @property
    def text(self) -> str:
        if self.mark is Mark.SUBSTITUTED:
            return f"{self.ref_text}→{self.hyp_text}"
        if self.mark is Mark.DELETED:
            return self.ref_text or ""
        return self.hyp_text or ""


@dataclass(frozen=True)
class AlignmentRendering:
    segments: tuple[RenderSegment, ...]
    legend: dict[Mark, int]


def build_rendering(
    alignment: Alignment,
    reference: TokenSequence,
    hypothesis: TokenSequence,
) -> AlignmentRendering:
    """Turn an alignment plus its source sequences into marked segments.

    Raises ValueError when the alignment does not belong to exactly these
    sequences (wrong lengths, out-of-range or out-of-order indices, or a
    match between unequal tokens).
    """
    if alignment.ref_len != len(reference) or alignment.hyp_len != len(hypothesis):
        raise ValueError(
            "alignment does not match the given sequences: lengths "
            f"{alignment.ref_len}/{alignment.hyp_len} vs "
            f"{len(reference)}/{len(hypothesis)}"
        )
    segments: list[RenderSegment] = []
    legend = {mark: 0 for mark in Mark}
    next_ref = 0
    next_hyp = 0
    for op in alignment.ops:
        ref_tok = None
        hyp_tok = None
        if op.kind is not OpKind.INSERTION:
            if op.ref_index != next_ref or next_ref >= len(reference):
                raise ValueError(
                    f"alignment inconsistent at reference index {op.ref_index}"
                )
            ref_tok = reference[next_ref]
            next_ref += 1
        if op.kind is not OpKind.DELETION:
            if op.hyp_index != next_hyp or next_hyp >= len(hypothesis):
                raise ValueError(
                    f"alignment inconsistent at hypothesis index {op.hyp_index}"
                )
            hyp_tok = hypothesis[next_hyp]
            next_hyp += 1
        if op.kind is OpKind.MATCH and ref_tok != hyp_tok:
            raise ValueError(
                f"match between unequal tokens {ref_tok!r} and {hyp_tok!r}"
            )
        if op.kind is OpKind.SUBSTITUTION and ref_tok == hyp_tok:
            raise ValueError(f"substitution between equal tokens {ref_tok!r}")
        mark = _MARK_FOR_OP[op.kind]
        legend[mark] += 1
        segments.append(RenderSegment(mark, ref_tok, hyp_tok))
    if next_ref != len(reference) or next_hyp != len(hypothesis):
        raise ValueError("alignment does not cover both sequences")
    return AlignmentRendering(segments=tuple(segments), legend=legend)


def _plain_segment(seg: RenderSegment) -> str:
    if seg.mark is Mark.CORRECT:
        return seg.hyp_text or ""
    if seg.mark is Mark.INSERTED:
        return "{+" + (seg.hyp_text or "") + "+}"
    if seg.mark is Mark.DELETED:
        return "{-" + (seg.ref_text or "") + "-}"
    return "{~" + (seg.ref_text or "") + "→" + (seg.hyp_text or "") + "~}"


def _html_segment(seg: RenderSegment) -> str:
    if seg.mark is Mark.CORRECT:
        return html.escape(seg.hyp_text or "")
    if seg.mark is Mark.INSERTED:
        return f'<span class="ins">{html.escape(seg.hyp_text or "")}</span>'
    if seg.mark is Mark.DELETED:
        return f'<span class="del">{html.escape(seg.ref_text or "")}</span>'
    inner = html.escape(seg.ref_text or "") + "→" + html.escape(seg.hyp_text or "")
    return f'<span class="sub">{inner}</span>'


def render_alignment(
    alignment: Alignment,
    reference: TokenSequence,
    hypothesis: TokenSequence,
    fmt: str = "plain",
) -> str:
    """Serialize an error-marked alignment as ``plain``, ``html``, or
    ``json``."""
    if fmt not in RENDER_FORMATS:
        raise ValueError(f"unknown rendering format {fmt!r}")
    rendering = build_rendering(alignment, reference, hypothesis)
    if fmt == "plain":
        return " ".join(_plain_segment(s) for s in rendering.segments)
    if fmt == "html":
        return " ".join(_html_segment(s) for s in rendering.segments)
    return json.dumps(
        {
            "segments": [
                {
                    "mark": s.mark.value,
                    "text": s.text,
                    "ref": s.ref_text,
                    "hyp": s.hyp_text,
                }
                for s in rendering.segments
            ],
            "legend": {mark.value: n for mark, n in rendering.legend.items()},
        },
        ensure_ascii=False,
    )


@dataclass(frozen=True)
class SummaryTable:
    """A formatted table: row labels down the side, column labels across,
    and pre-formatted cell strings."""

    title: str
    row_labels: tuple[str, ...]
    column_labels: tuple[str, ...]
    cells: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if len(self.cells) != len(self.row_labels):
            raise ValueError("cell rows do not match row labels")
        for row in self.cells:
            if len(row) != len(self.column_labels):
                raise ValueError("cell columns do not match column labels")


@dataclass
class ScoreRow:
    """Per-recording scoring results; absent values render as blanks."""

    id: str
    wer_percent: float | None = None
    wcpm_human: float | None = None
    wcpm_auto: float | None = None
    error: str | None = None
    alignment_markup: str | None = None

    @property
    def abs_diff(self) -> float | None:
        if self.wcpm_human is None or self.wcpm_auto is None:
            return None
        return abs(self.wcpm_human - self.wcpm_auto)


_NUMERIC_COLUMNS = ("wer_percent", "wcpm_human", "wcpm_auto", "abs_diff")
FOOTER_LABELS = ("mean", "min", "max", "variance", "pearson_r", "mean_abs_diff")


def _fmt(value: float | None, decimals: int = 1) -> str:
    if value is None:
        return ""
    return f"{value:.{decimals}f}"


def _column_values(rows: Sequence[ScoreRow], column: str) -> list[float]:
    return [
        getattr(row, column) for row in rows if getattr(row, column) is not None
    ]


@dataclass
class _Footer:
    stats: dict[str, dict[str, float | None]] = field(default_factory=dict)
    pearson_r: float | None = None
    mean_abs_diff: float | None = None


def _build_footer(rows: Sequence[ScoreRow]) -> _Footer:
    footer = _Footer()
    for stat in ("mean", "min", "max", "variance"):
        footer.stats[stat] = {}
    for column in _NUMERIC_COLUMNS:
        values = _column_values(rows, column)
        if not values:
            for stat in ("mean", "min", "max", "variance"):
                footer.stats[stat][column] = None
            continue
        summary = summarize(values)
        footer.stats["mean"][column] = summary.mean
        footer.stats["min"][column] = summary.min
        footer.stats["max"][column] = summary.max
        footer.stats["variance"][column] = summary.variance

    pairs = [
        (row.wcpm_human, row.wcpm_auto)
        for row in rows
        if row.wcpm_human is not None and row.wcpm_auto is not None
    ]
    if len(pairs) >= 2:
        a = [p[0] for p in pairs]
        b = [p[1] for p in pairs]
        footer.mean_abs_diff = mean_abs_diff(a, b)
        try:
            footer.pearson_r = pearson(a, b)
        except ValueError:
            footer.pearson_r = None  # constant scores: correlation undefined
    return footer


def _build_table(rows: Sequence[ScoreRow], with_alignments: bool) -> SummaryTable:
    has_errors = any(row.error for row in rows)
    columns = list(_NUMERIC_COLUMNS)
    if has_errors:
        columns.append("errors")
    if with_alignments:
        columns.append("alignment")

    row_labels: list[str] = []
    cells: list[tuple[str, ...]] = []
    for row in rows:
        row_labels.append(row.id)
        cell = [
            _fmt(row.wer_percent),
            _fmt(row.wcpm_human),
            _fmt(row.wcpm_auto),
            _fmt(row.abs_diff),
        ]
        if has_errors:
            cell.append(row.error or "")
        if with_alignments:
            cell.append(row.alignment_markup or "")
        cells.append(tuple(cell))

    footer = _build_footer(rows)
    pad = [""] * (len(columns) - len(_NUMERIC_COLUMNS))
    for stat in ("mean", "min", "max", "variance"):
        row_labels.append(stat)
        cells.append(
            tuple(_fmt(footer.stats[stat][c]) for c in _NUMERIC_COLUMNS) + tuple(pad)
        )
    if footer.mean_abs_diff is not None:
        # Agreement stats live in the abs_diff column.
        row_labels.append("pearson_r")
        cells.append(("", "", "", _fmt(footer.pearson_r, 3)) + tuple(pad))
        row_labels.append("mean_abs_diff")
        cells.append(("", "", "", _fmt(footer.mean_abs_diff)) + tuple(pad))
    return SummaryTable(
        title="scores",
        row_labels=tuple(row_labels),
        column_labels=tuple(columns),
        cells=tuple(cells),
    )


def _table_to_csv(table: SummaryTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id"] + list(table.column_labels))
    for label, row in zip(table.row_labels, table.cells):
        writer.writerow((label, *row))
    return out.getvalue()


def _table_to_markdown(table: SummaryTable) -> str:
    header = ["id"] + list(table.column_labels)
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    for label, row in zip(table.row_labels, table.cells):
        lines.append("| " + " | ".join((label, *row)) + " |")
    return "\n".join(lines) + "\n"


def _rows_to_json(rows: Sequence[ScoreRow], with_alignments: bool) -> str:
    footer = _build_footer(rows)
    payload: dict = {
        "rows": [
            {
                "id": row.id,
                "wer_percent": row.wer_percent,
                "wcpm_human": row.wcpm_human,
                "wcpm_auto": row.wcpm_auto,
                "abs_diff": row.abs_diff,
                "error": row.error,
                **(
                    {"alignment": row.alignment_markup}
                    if with_alignments
                    else {}
                ),
            }
            for row in rows
        ],
        "footer": {
            "count": len(rows),
            **footer.stats,
            "pearson_r": footer.pearson_r,
            "mean_abs_diff": footer.mean_abs_diff,
        },
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def emit_summary(
    rows: Sequence[ScoreRow],
    fmt: str = "csv",
    with_alignments: bool = False,
) -> str:
    """Serialize per-recording score rows plus cohort footer statistics.

    ``csv`` and ``md`` print values at fixed precision; ``json`` carries
    full-precision numbers. An ``errors`` column appears only when some
    row actually failed. The footer always holds mean/min/max/variance per
    numeric column and, when at least two recordings carry both scoring
    methods, the correlation and mean absolute difference between methods
    (placed in the abs_diff column).
    """
    if not rows:
        raise ValueError("cannot emit a summary of zero recordings")
    if fmt not in SUMMARY_FORMATS:
        raise ValueError(f"unknown summary format {fmt!r}")
    if fmt == "json":
        return _rows_to_json(rows, with_alignments)
    table = _build_table(rows, with_alignments)
    if fmt == "csv":
        return _table_to_csv(table)
    return _table_to_markdown(table)


def parse_summary_rows(text: str) -> list[dict]:
    """Parse ``emit_summary`` output (csv or json) back into plain row
    dicts with numeric values; footer rows are excluded."""
    if text.lstrip().startswith("{"):
        return json.loads(text)["rows"]
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for row in reader:
        if row.get("id") in FOOTER_LABELS:
            continue
        for key in ("wer_percent", "wcpm_human", "wcpm_auto", "abs_diff"):
            if key in row:
                row[key] = float(row[key]) if row[key] else None
        rows.append(row)
    return rows
