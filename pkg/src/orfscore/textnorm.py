"""Text normalization for reading transcripts and story texts.

All scoring in this package operates on token sequences produced here, so
that alignment compares spoken words rather than formatting artifacts.
Rules:

- lowercase (Unicode default case folding)
- curly apostrophes (U+2018/U+2019) mapped to ASCII ``'``
- punctuation stripped, except apostrophes and hyphens sitting between
  two letters (``brother's``, ``mother-in-law``)
- dash-type punctuation acts as a word separator; all other punctuation
  is deleted in place
- digits kept verbatim (``11`` stays ``11``)
- tokens are the whitespace-split words of the result
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum

TokenSequence = list[str]

_APOSTROPHE_MAP = str.maketrans({"‘": "'", "’": "'"})


class SourceKind(Enum):
    REFERENCE_STORY = "reference_story"
    HUMAN_TRANSCRIPT = "human_transcript"
    ASR_TRANSCRIPT = "asr_transcript"


@dataclass(frozen=True)
class RawText:
    """A piece of text plus where it came from (story, human, or ASR)."""

    content: str
    source_kind: SourceKind


def _is_letter(ch: str) -> bool:
    return ch.isalpha()


def normalize(raw: RawText | str | bytes) -> TokenSequence:
    """Convert raw text into a canonical lowercase token sequence.

    Accepts a plain string, UTF-8 bytes, or a :class:`RawText`. Returns an
    empty list for empty or all-punctuation input. Bytes that are not valid
    UTF-8 raise :class:`UnicodeDecodeError`.
    """
    if isinstance(raw, RawText):
        text = raw.content
    elif isinstance(raw, bytes):
        text = raw.decode("utf-8")
    else:
        text = raw

    text = text.translate(_APOSTROPHE_MAP).lower()
    out: list[str] = []
    last = len(text) - 1
    for i, ch in enumerate(text):
        if ch == "'" or ch == "-":
            # Kept only between two letters; a stray hyphen still separates.
            interior = (
                i > 0
                and i < last
                and _is_letter(text[i - 1])
                and _is_letter(text[i + 1])
            )
            if interior:
                out.append(ch)
            elif ch == "-":
                out.append(" ")
        else:
            cat = unicodedata.category(ch)
            if cat.startswith("P"):
                if cat == "Pd":
                    out.append(" ")
            else:
                out.append(ch)
    return "".join(out).split()


def token_count(tokens: TokenSequence) -> int:
    """Number of words in a normalized sequence (the WER denominator)."""
    return len(tokens)


def render(tokens: TokenSequence) -> str:
    """Join tokens with single spaces; inverse of :func:`normalize` on
    already-normalized text."""
    return " ".join(tokens)
