"""Words-correct-per-minute scoring and cohort statistics.

Two scoring routes produce a :class:`WcpmScore`: one from a rater's error
tally, one from an automated WER. Both apply the same rate factor of
60 / duration, and both clamp the words-correct estimate at zero, since a
reading with more errors than words has no meaningful negative rate.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class ScoringMethod(Enum):
    HUMAN_ERROR_COUNT = "human_error_count"
    AUTOMATED_WER = "automated_wer"


@dataclass(frozen=True)
class WcpmScore:
    words_correct: float
    duration_seconds: float
    wcpm: float
    method: ScoringMethod

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "words_correct": self.words_correct,
            "duration_seconds": self.duration_seconds,
            "wcpm": self.wcpm,
        }


@dataclass(frozen=True)
class CohortSummary:
    """Mean/range/variance of one metric across recordings."""

    count: int
    mean: float
    min: float
    max: float
    variance: float | None  # sample (n-1) variance; None when count < 2


@dataclass(frozen=True)
class AgreementStats:
    """How closely two scoring methods agree over the same recordings."""

    pearson_r: float
    mean_abs_diff: float
    mean_a: float
    mean_b: float
    count: int


def _check_duration(duration_seconds: float) -> None:
    if not duration_seconds > 0:
        raise ValueError(
            f"duration must be positive, got {duration_seconds!r}"
        )


def wcpm_from_errors(
    story_words: int, error_count: int, duration_seconds: float
) -> WcpmScore:
    """WCPM by the rater protocol: (story words - errors) * 60 / duration.

    ``error_count`` may exceed ``story_words``; words correct clamps at 0.
    """
    _check_duration(duration_seconds)
    if story_words <= 0:
        raise ValueError(f"story_words must be positive, got {story_words!r}")
    if error_count < 0:
        raise ValueError(f"error_count must be >= 0, got {error_count!r}")
    words_correct = max(0, story_words - error_count)
    return WcpmScore(
        words_correct=words_correct,
        duration_seconds=duration_seconds,
        wcpm=words_correct * (60.0 / duration_seconds),
        method=ScoringMethod.HUMAN_ERROR_COUNT,
    )


def wcpm_from_wer(
    story_words: int, wer_fraction: float, duration_seconds: float
) -> WcpmScore:
    """WCPM by the automated route: story words * (1 - WER) * 60 / duration.

    WER above 1 clamps words correct at 0 rather than going negative.
    """
    _check_duration(duration_seconds)
    if story_words <= 0:
        raise ValueError(f"story_words must be positive, got {story_words!r}")
    if wer_fraction < 0:
        raise ValueError(f"wer_fraction must be >= 0, got {wer_fraction!r}")
    words_correct = story_words * max(0.0, 1.0 - wer_fraction)
    return WcpmScore(
        words_correct=words_correct,
        duration_seconds=duration_seconds,
        wcpm=words_correct * (60.0 / duration_seconds),
        method=ScoringMethod.AUTOMATED_WER,
    )


def summarize(values: Sequence[float]) -> CohortSummary:
    """Cohort summary of a nonempty list of metric values."""
    if len(values) == 0:
        raise ValueError("cannot summarize an empty cohort")
    return CohortSummary(
        count=len(values),
        mean=statistics.fmean(values),
        min=min(values),
        max=max(values),
        variance=statistics.variance(values) if len(values) >= 2 else None,
    )


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson product-moment correlation of two equal-length lists.

    Undefined (raises ValueError) for fewer than two pairs or when either
    list is constant.
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("correlation needs at least two pairs")
    mean_a = math.fsum(a) / n
    mean_b = math.fsum(b) / n
    da = [x - mean_a for x in a]
    db = [y - mean_b for y in b]
    var_a = math.fsum(x * x for x in da)
    var_b = math.fsum(y * y for y in db)
    if var_a == 0.0 or var_b == 0.0:
        raise ValueError("correlation is undefined for a constant list")
    cov = math.fsum(x * y for x, y in zip(da, db))
    return cov / math.sqrt(var_a * var_b)


def mean_abs_diff(a: Sequence[float], b: Sequence[float]) -> float:
    """Mean absolute per-item difference between two paired score lists."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise ValueError("mean_abs_diff needs at least one pair")
    return math.fsum(abs(x - y) for x, y in zip(a, b)) / len(a)


def agreement(a: Sequence[float], b: Sequence[float]) -> AgreementStats:
    """Agreement statistics (correlation + mean absolute difference)
    between two scoring methods applied to the same recordings."""
    return AgreementStats(
        pearson_r=pearson(a, b),
        mean_abs_diff=mean_abs_diff(a, b),
        mean_a=math.fsum(a) / len(a),
        mean_b=math.fsum(b) / len(b),
        count=len(a),
    )
