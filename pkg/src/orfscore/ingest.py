"""Recording ingestion: JSONL manifests, WAV durations, ASR backends.

A manifest is a JSON-Lines file, one recording per line, with the keys
``id``, ``reference_text``, ``human_transcript``, ``asr_transcript``,
``duration_seconds``, ``human_error_count``, and ``audio_path``. Only
``id`` and ``reference_text`` are mandatory; ``duration_seconds`` may be
omitted when ``audio_path`` points at a readable WAV file, in which case
the duration is probed from the RIFF header. Unknown keys are ignored.
Relative audio paths are resolved against the manifest's directory.

ASR transcripts can come from three pluggable backend kinds: a directory
of per-recording transcript files, an external command run per recording,
or an HTTP endpoint that accepts raw WAV bytes and returns JSON with a
top-level ``text`` field.
"""

from __future__ import annotations

import json
import shlex
import struct
import subprocess
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, Union

from .textnorm import RawText, SourceKind

MANIFEST_FIELDS = (
    "id",
    "reference_text",
    "human_transcript",
    "asr_transcript",
    "duration_seconds",
    "human_error_count",
    "audio_path",
)


class ManifestError(ValueError):
    """A manifest line failed to parse or validate."""


class WavFormatError(ValueError):
    """A file is not a readable RIFF/WAVE file."""


class BackendError(RuntimeError):
    """An ASR backend failed to produce a transcript."""


@dataclass
class RecordingRecord:
    """One student reading: story text, transcripts, and clip duration."""

    id: str
    reference_text: str
    duration_seconds: float
    human_transcript: str | None = None
    asr_transcript: str | None = None
    human_error_count: int | None = None
    audio_path: str | None = None

    @property
    def is_scoreable(self) -> bool:
        """True when at least one scoring input (a transcript or a human
        error count) is present."""
        return (
            self.human_transcript is not None
            or self.asr_transcript is not None
            or self.human_error_count is not None
        )

    def to_manifest_dict(self) -> dict:
        """Manifest representation; omits absent optional fields."""
        out: dict = {"id": self.id, "reference_text": self.reference_text}
        if self.human_transcript is not None:
            out["human_transcript"] = self.human_transcript
        if self.asr_transcript is not None:
            out["asr_transcript"] = self.asr_transcript
        out["duration_seconds"] = self.duration_seconds
        if self.human_error_count is not None:
            out["human_error_count"] = self.human_error_count
        if self.audio_path is not None:
            out["audio_path"] = self.audio_path
        return out


def _require_str(obj: dict, key: str, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise ManifestError(f"line {lineno}: {key!r} must be a nonempty string")
    return value


def _optional_str(obj: dict, key: str, lineno: int) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ManifestError(f"line {lineno}: {key!r} must be a string")
    return value


def load_manifest(path: str | Path) -> list[RecordingRecord]:
    """Load and validate a JSONL manifest.

    Raises :class:`ManifestError` naming the offending line for malformed
    JSON, missing or mistyped fields, nonpositive durations, and duplicate
    ids. Blank lines are skipped.
    """
    path = Path(path)
    records: list[RecordingRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"line {lineno}: expected a JSON object")

            rec_id = _require_str(obj, "id", lineno)
            if rec_id in seen:
                raise ManifestError(f"line {lineno}: duplicate id {rec_id!r}")
            seen.add(rec_id)
            reference_text = _require_str(obj, "reference_text", lineno)

            audio_path = _optional_str(obj, "audio_path", lineno)
            duration = obj.get("duration_seconds")
            if duration is None:
                if audio_path is None:
                    raise ManifestError(
                        f"line {lineno}: record {rec_id!r} needs "
                        "duration_seconds or audio_path"
                    )
                try:
                    duration = probe_wav_duration(_resolve_audio(path, audio_path))
                except (OSError, WavFormatError) as exc:
                    raise ManifestError(
                        f"line {lineno}: cannot derive duration for "
                        f"{rec_id!r}: {exc}"
                    ) from exc
            if not isinstance(duration, (int, float)) or isinstance(duration, bool):
                raise ManifestError(
                    f"line {lineno}: duration_seconds must be a number"
                )
            if not duration > 0:
                raise ManifestError(
                    f"line {lineno}: duration_seconds must be positive, "
                    f"got {duration!r}"
                )

            error_count = obj.get("human_error_count")
            if error_count is not None:
                if not isinstance(error_count, int) or isinstance(error_count, bool):
                    raise ManifestError(
                        f"line {lineno}: human_error_count must be an integer"
                    )
                if error_count < 0:
                    raise ManifestError(
                        f"line {lineno}: human_error_count must be >= 0"
                    )

            records.append(
                RecordingRecord(
                    id=rec_id,
                    reference_text=reference_text,
                    duration_seconds=float(duration),
                    human_transcript=_optional_str(obj, "human_transcript", lineno),
                    asr_transcript=_optional_str(obj, "asr_transcript", lineno),
                    human_error_count=error_count,
                    audio_path=audio_path,
                )
            )
    return records


def write_manifest(records: Sequence[RecordingRecord], path: str | Path) -> None:
    """Serialize records back to JSONL; inverse of :func:`load_manifest`."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_manifest_dict(), ensure_ascii=False) + "\n")


def _resolve_audio(manifest_path: Path, audio_path: str) -> Path:
    p = Path(audio_path)
    return p if p.is_absolute() else manifest_path.parent / p


def probe_wav_duration(path: str | Path) -> float:
    """Duration in seconds of a PCM WAV file, from its headers only.

    Computed as data-chunk bytes / (sample_rate * channels * bytes per
    sample), all read from the RIFF/fmt headers without decoding audio.
    """
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != b"RIFF":
            raise WavFormatError(f"{path}: missing RIFF magic, not a WAV file")
        if head[8:12] != b"WAVE":
            raise WavFormatError(f"{path}: RIFF file is not WAVE")

        fmt: tuple[int, int, int] | None = None
        data_size: int | None = None
        while True:
            header = fh.read(8)
            if len(header) < 8:
                break
            chunk_id, size = struct.unpack("<4sI", header)
            if chunk_id == b"fmt ":
                body = fh.read(size)
                if len(body) < 16:
                    raise WavFormatError(f"{path}: truncated fmt chunk")
                _, channels, sample_rate, _, _, bits = struct.unpack(
                    "<HHIIHH", body[:16]
                )
                fmt = (channels, sample_rate, bits)
                if size % 2:
                    fh.seek(1, 1)
            else:
                if chunk_id == b"data":
                    data_size = size
                fh.seek(size + (size % 2), 1)
            if fmt is not None and data_size is not None:
                break

    if fmt is None:
        raise WavFormatError(f"{path}: no fmt chunk found")
    if data_size is None:
        raise WavFormatError(f"{path}: no data chunk found")
    channels, sample_rate, bits = fmt
    byte_rate = sample_rate * channels * (bits // 8)
    if byte_rate == 0:
        raise WavFormatError(f"{path}: fmt chunk declares a zero byte rate")
    return data_size / byte_rate


@dataclass(frozen=True)
class TranscriptFilesBackend:
    """Reads pre-computed transcripts from ``directory/<pattern>``."""

    directory: str
    pattern: str = "{id}.txt"


@dataclass(frozen=True)
class ExternalCommandBackend:
    """Runs a command per recording; ``{audio}`` expands to the audio path
    and standard output is captured as the transcript."""

    template: str


@dataclass(frozen=True)
class HttpEndpointBackend:
    """POSTs raw WAV bytes and expects JSON with a ``text`` field."""

    url: str
    timeout_seconds: float = 30.0
    auth_header: str | None = None


AsrBackend = Union[TranscriptFilesBackend, ExternalCommandBackend, HttpEndpointBackend]


def parse_backend_spec(spec: str) -> AsrBackend:
    """Parse a backend spec string of the form ``files:DIR``,
    ``command:TEMPLATE``, or ``http:URL``."""
    kind, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise ValueError(f"invalid backend spec {spec!r}")
    if kind == "files":
        return TranscriptFilesBackend(directory=rest)
    if kind == "command":
        return ExternalCommandBackend(template=rest)
    if kind == "http":
        return HttpEndpointBackend(url=rest)
    raise ValueError(f"unknown backend kind {kind!r} in {spec!r}")


def _require_audio(record: RecordingRecord) -> str:
    if record.audio_path is None:
        raise BackendError(
            f"record {record.id!r} has no audio_path, required by this backend"
        )
    return record.audio_path


def fetch_transcript(record: RecordingRecord, backend: AsrBackend) -> RawText:
    """Obtain an ASR transcript for one recording from the given backend.

    Never mutates the record. Failures raise :class:`BackendError` with
    the underlying cause (missing file, exit status and stderr, HTTP
    status, timeout, or malformed response).
    """
    if isinstance(backend, TranscriptFilesBackend):
        path = Path(backend.directory) / backend.pattern.format(id=record.id)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise BackendError(f"transcript file not readable: {exc}") from exc
        return RawText(text, SourceKind.ASR_TRANSCRIPT)

    if isinstance(backend, ExternalCommandBackend):
        audio = _require_audio(record)
        argv = [arg.replace("{audio}", audio) for arg in shlex.split(backend.template)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except OSError as exc:
            raise BackendError(f"cannot run {argv[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            raise BackendError(
                f"command {argv[0]!r} exited with status {proc.returncode}: "
                f"{proc.stderr.strip()}"
            )
        return RawText(proc.stdout, SourceKind.ASR_TRANSCRIPT)

    if isinstance(backend, HttpEndpointBackend):
        audio = _require_audio(record)
        body = Path(audio).read_bytes()
        headers = {"Content-Type": "audio/wav"}
        if backend.auth_header:
            name, _, value = backend.auth_header.partition(":")
            headers[name.strip()] = value.strip()
        request = urllib.request.Request(backend.url, data=body, headers=headers)
        try:
            with urllib.request.urlopen(
                request, timeout=backend.timeout_seconds
            ) as resp:
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            raise BackendError(f"HTTP {exc.code} from {backend.url}") from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendError(f"request to {backend.url} failed: {exc}") from exc
        try:
            parsed = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise BackendError(
                f"non-JSON response from {backend.url}: {exc}"
            ) from exc
        text = parsed.get("text") if isinstance(parsed, dict) else None
        if not isinstance(text, str):
            raise BackendError(
                f"response from {backend.url} has no top-level 'text' string"
            )
        return RawText(text, SourceKind.ASR_TRANSCRIPT)

    raise TypeError(f"unknown backend type {type(backend).__name__}")


def fetch_with_retries(
    record: RecordingRecord,
    backend: AsrBackend,
    retries: int = 0,
    sleep: Callable[[float], None] = time.sleep,
) -> RawText:
    """:func:`fetch_transcript` with bounded retry; exponential backoff
    starting at 1 s and doubling per attempt."""
    delay = 1.0
    for attempt in range(retries + 1):
        try:
            return fetch_transcript(record, backend)
        except BackendError:
            if attempt == retries:
                raise
            sleep(delay)
            delay *= 2.0
    raise AssertionError("unreachable")


def fetch_transcripts(
    records: Sequence[RecordingRecord],
    backend: AsrBackend,
    parallelism: int = 4,
    retries: int = 0,
) -> dict[str, RawText | BackendError]:
    """Fetch transcripts for many records, up to ``parallelism`` at a time.

    Returns a map from record id to either the transcript or the error
    that record hit; the map content does not depend on completion order.
    """
    results: dict[str, RawText | BackendError] = {}

    def one(record: RecordingRecord) -> tuple[str, RawText | BackendError]:
        try:
            return record.id, fetch_with_retries(record, backend, retries)
        except BackendError as exc:
            return record.id, exc

    if parallelism <= 1 or len(records) <= 1:
        for rec in records:
            rec_id, outcome = one(rec)
            results[rec_id] = outcome
        return results
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        for rec_id, outcome in pool.map(one, records):
            results[rec_id] = outcome
    return results
