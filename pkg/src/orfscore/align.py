"""Minimal word-level edit alignment and word error rate.

The aligner finds an edit script of minimal total cost between a reference
and a hypothesis token sequence under unit costs for substitution,
insertion, and deletion (matches are free). Minimal-cost scripts can still
differ in how they split errors between a substitution and an
insertion+deletion pair, and an arbitrary split breaks the symmetry
I(a,b) == D(b,a). The engine therefore returns the canonical minimal
script with the fewest substitutions (equivalently, the most matches),
which makes the I/D/S counts a mirror-symmetric function of the inputs.
Remaining traceback ties are broken with a fixed preference -- match, then
substitution, then deletion, then insertion -- so the returned op sequence
is a pure function of its inputs.

The dynamic program fills a full (ref+1) x (hyp+1) matrix, so time and
memory are quadratic in the input lengths; a pair of 2,000-token sequences
needs a ~4M-cell int32 matrix (~16 MB). Rows are computed with vectorized
numpy sweeps, which keeps a 200x200 alignment well under a millisecond.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .textnorm import TokenSequence


class EmptyReferenceError(ValueError):
    """Raised when a WER denominator would be zero (empty reference)."""


class OpKind(Enum):
    MATCH = "match"
    SUBSTITUTION = "substitution"
    INSERTION = "insertion"
    DELETION = "deletion"


@dataclass(frozen=True)
class AlignmentOp:
    """One step of an edit script.

    ``ref_index`` is absent for insertions, ``hyp_index`` for deletions;
    matches and substitutions carry both.
    """

    kind: OpKind
    ref_index: int | None = None
    hyp_index: int | None = None


@dataclass(frozen=True)
class Alignment:
    ops: tuple[AlignmentOp, ...]
    ref_len: int
    hyp_len: int

    def _count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)

    @property
    def matches(self) -> int:
        return self._count(OpKind.MATCH)

    @property
    def substitutions(self) -> int:
        return self._count(OpKind.SUBSTITUTION)

    @property
    def insertions(self) -> int:
        return self._count(OpKind.INSERTION)

    @property
    def deletions(self) -> int:
        return self._count(OpKind.DELETION)

    @property
    def edit_cost(self) -> int:
        """Total insertions + deletions + substitutions."""
        return self.insertions + self.deletions + self.substitutions


@dataclass(frozen=True)
class WerBreakdown:
    """Error counts of one alignment plus the derived WER."""

    insertions: int
    deletions: int
    substitutions: int
    matches: int
    ref_len: int
    wer_fraction: float

    @property
    def wer_percent(self) -> float:
        return self.wer_fraction * 100.0

    @property
    def total_errors(self) -> int:
        return self.insertions + self.deletions + self.substitutions


# Cell values pack (edit cost, substitution count) as cost * _STEP + subs,
# so integer order equals lexicographic order; valid while subs < _STEP,
# i.e. sequences shorter than 4,096 tokens each.
_STEP = 1 << 12
_SUB = _STEP + 1


def _cost_matrix(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> np.ndarray:
    """Fill the full DP matrix of packed (cost, subs) values, one
    vectorized row sweep at a time.

    Within a row, the left-neighbor (insertion) dependency is resolved via
    a running minimum: cur[j] = min_k<=j (cand[k] + (j - k) * _STEP),
    computed as ramp + cummin(cand - ramp), where cand[j] folds the
    diagonal and upper candidates that depend only on the previous row.
    """
    n = ref_ids.shape[0]
    m = hyp_ids.shape[0]
    dp = np.empty((n + 1, m + 1), dtype=np.int32)
    ramp = np.arange(m + 1, dtype=np.int32) * _STEP
    dp[0] = ramp
    cand = np.empty(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        prev = dp[i - 1]
        cand[0] = i * _STEP
        sub = (hyp_ids != ref_ids[i - 1]).astype(np.int32) * _SUB
        np.minimum(prev[:-1] + sub, prev[1:] + _STEP, out=cand[1:])
        np.subtract(cand, ramp, out=cand)
        np.minimum.accumulate(cand, out=cand)
        np.add(cand, ramp, out=dp[i])
    return dp


def align(reference: TokenSequence, hypothesis: TokenSequence) -> Alignment:
    """Compute a minimal-cost word alignment between two token sequences.

    Either sequence may be empty. The result is deterministic: equal
    inputs yield identical op sequences, not merely equal counts.

    The matrix is filled over the reversed sequences so that the traceback
    walks the originals front to back; positional ties then resolve toward
    the earliest plausible pairing, which marks a repetition like
    "the the" at its second occurrence rather than its first.
    """
    n = len(reference)
    m = len(hypothesis)
    if n == 0 and m == 0:
        return Alignment(ops=(), ref_len=0, hyp_len=0)
    if min(n, m) >= _STEP:
        raise ValueError(
            f"sequences above {_STEP - 1} tokens are not supported "
            f"(got {n} and {m})"
        )

    ids: dict[str, int] = {}
    ref_ids = np.fromiter(
        (ids.setdefault(t, len(ids)) for t in reversed(reference)),
        dtype=np.int32,
        count=n,
    )
    hyp_ids = np.fromiter(
        (ids.setdefault(t, len(ids)) for t in reversed(hypothesis)),
        dtype=np.int32,
        count=m,
    )
    dp = _cost_matrix(ref_ids, hyp_ids)

    # Cell (i, j) covers the last i/j reversed tokens, i.e. original
    # positions n-i and m-j onward; ops therefore come out front to back.
    ops: list[AlignmentOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dp[i, j]
        if i > 0 and j > 0:
            equal = reference[n - i] == hypothesis[m - j]
            diag = dp[i - 1, j - 1]
            if equal and diag == here:
                ops.append(AlignmentOp(OpKind.MATCH, n - i, m - j))
                i -= 1
                j -= 1
                continue
            if not equal and diag + _SUB == here:
                ops.append(AlignmentOp(OpKind.SUBSTITUTION, n - i, m - j))
                i -= 1
                j -= 1
                continue
        if i > 0 and dp[i - 1, j] + _STEP == here:
            ops.append(AlignmentOp(OpKind.DELETION, ref_index=n - i))
            i -= 1
            continue
        ops.append(AlignmentOp(OpKind.INSERTION, hyp_index=m - j))
        j -= 1
    return Alignment(ops=tuple(ops), ref_len=n, hyp_len=m)


def wer(reference: TokenSequence, hypothesis: TokenSequence) -> WerBreakdown:
    """Word error rate of ``hypothesis`` against a nonempty ``reference``.

    The fraction is (insertions + deletions + substitutions) / reference
    length; it is 0 only for identical sequences and may exceed 1. Values
    are not clamped here.
    """
    if len(reference) == 0:
        raise EmptyReferenceError(
            "WER is undefined for an empty reference (zero denominator)"
        )
    a = align(reference, hypothesis)
    ins, dels, subs = a.insertions, a.deletions, a.substitutions
    return WerBreakdown(
        insertions=ins,
        deletions=dels,
        substitutions=subs,
        matches=a.matches,
        ref_len=a.ref_len,
        wer_fraction=(ins + dels + subs) / a.ref_len,
    )


def count_reading_errors(story: TokenSequence, spoken: TokenSequence) -> int:
    """Tally reading errors the way a rater marks them: insertions plus
    deletions plus substitutions of the minimal alignment of ``spoken``
    against the story text."""
    if len(story) == 0:
        raise EmptyReferenceError(
            "error counting is undefined for an empty story text"
        )
    return align(story, spoken).edit_cost
