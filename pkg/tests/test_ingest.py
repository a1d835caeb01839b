import json
import struct
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from orfscore.ingest import (
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
from orfscore.textnorm import SourceKind


def make_wav(
    sample_rate=16000,
    channels=1,
    bits=16,
    data_bytes=32000,
    magic=b"RIFF",
    with_fmt=True,
    with_data=True,
    extra_chunk=True,
):
    """Assemble WAV bytes by hand, independent of the probe under test."""
    chunks = b""
    if with_fmt:
        byte_rate = sample_rate * channels * bits // 8
        block_align = channels * bits // 8
        body = struct.pack(
            "<HHIIHH", 1, channels, sample_rate, byte_rate, block_align, bits
        )
        chunks += b"fmt " + struct.pack("<I", len(body)) + body
    if extra_chunk:
        chunks += b"LIST" + struct.pack("<I", 4) + b"INFO"
    if with_data:
        chunks += b"data" + struct.pack("<I", data_bytes) + b"\x00" * data_bytes
    riff_body = b"WAVE" + chunks
    return magic + struct.pack("<I", len(riff_body)) + riff_body


def _record(rec_id="s01", **kwargs):
    defaults = dict(
        id=rec_id,
        reference_text="a farmer went out",
        duration_seconds=60.0,
    )
    defaults.update(kwargs)
    return RecordingRecord(**defaults)


# -- manifests ---------------------------------------------------------------


def test_load_minimal_manifest(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        json.dumps(
            {
                "id": "s01",
                "reference_text": "a farmer went out",
                "asr_transcript": "a farmer went out",
                "duration_seconds": 60,
            }
        )
        + "\n"
    )
    records = load_manifest(path)
    assert len(records) == 1
    rec = records[0]
    assert rec.id == "s01"
    assert rec.duration_seconds == 60.0
    assert rec.is_scoreable


def test_manifest_missing_duration_and_audio_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(json.dumps({"id": "s01", "reference_text": "x"}) + "\n")
    with pytest.raises(ManifestError, match="duration_seconds or audio_path"):
        load_manifest(path)


def test_manifest_duplicate_id_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    line = json.dumps(
        {"id": "s01", "reference_text": "x", "duration_seconds": 10}
    )
    path.write_text(line + "\n" + line + "\n")
    with pytest.raises(ManifestError, match="s01"):
        load_manifest(path)


def test_manifest_bad_json_names_line(tmp_path):
    path = tmp_path / "m.jsonl"
    good = json.dumps({"id": "a", "reference_text": "x", "duration_seconds": 5})
    path.write_text(good + "\n{oops\n")
    with pytest.raises(ManifestError, match="line 2"):
        load_manifest(path)


def test_manifest_nonpositive_duration_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        json.dumps({"id": "a", "reference_text": "x", "duration_seconds": 0}) + "\n"
    )
    with pytest.raises(ManifestError, match="positive"):
        load_manifest(path)


def test_manifest_bad_error_count_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        json.dumps(
            {
                "id": "a",
                "reference_text": "x",
                "duration_seconds": 5,
                "human_error_count": -1,
            }
        )
        + "\n"
    )
    with pytest.raises(ManifestError, match="human_error_count"):
        load_manifest(path)


def test_manifest_unknown_fields_ignored_and_blank_lines_skipped(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        json.dumps(
            {
                "id": "a",
                "reference_text": "x",
                "duration_seconds": 5,
                "grade_level": 4,
            }
        )
        + "\n\n"
    )
    assert len(load_manifest(path)) == 1


def test_manifest_duration_probed_from_wav(tmp_path):
    (tmp_path / "clip.wav").write_bytes(make_wav())
    path = tmp_path / "m.jsonl"
    path.write_text(
        json.dumps({"id": "a", "reference_text": "x", "audio_path": "clip.wav"})
        + "\n"
    )
    records = load_manifest(path)
    assert records[0].duration_seconds == 1.0


def test_manifest_round_trip(tmp_path):
    records = [
        _record("s01", human_transcript="a farmer", human_error_count=2),
        _record("s02", asr_transcript="went out", audio_path="x.wav"),
    ]
    path = tmp_path / "round.jsonl"
    write_manifest(records, path)
    assert load_manifest(path) == records


# -- WAV probing -------------------------------------------------------------


def test_probe_mono_16k(tmp_path):
    path = tmp_path / "a.wav"
    path.write_bytes(make_wav(16000, 1, 16, data_bytes=32000))
    assert probe_wav_duration(path) == 1.0


def test_probe_stereo_44k(tmp_path):
    path = tmp_path / "b.wav"
    path.write_bytes(make_wav(44100, 2, 16, data_bytes=176400))
    assert probe_wav_duration(path) == 1.0


def test_probe_rejects_wrong_magic(tmp_path):
    path = tmp_path / "c.wav"
    path.write_bytes(make_wav(magic=b"RIFX"))
    with pytest.raises(WavFormatError, match="RIFF"):
        probe_wav_duration(path)


def test_probe_rejects_missing_fmt(tmp_path):
    path = tmp_path / "d.wav"
    path.write_bytes(make_wav(with_fmt=False))
    with pytest.raises(WavFormatError, match="fmt"):
        probe_wav_duration(path)


def test_probe_rejects_missing_data(tmp_path):
    path = tmp_path / "e.wav"
    path.write_bytes(make_wav(with_data=False))
    with pytest.raises(WavFormatError, match="data"):
        probe_wav_duration(path)


def test_probe_rejects_zero_byte_rate(tmp_path):
    path = tmp_path / "f.wav"
    path.write_bytes(make_wav(sample_rate=0))
    with pytest.raises(WavFormatError, match="byte rate"):
        probe_wav_duration(path)


def test_probe_duration_scales_linearly(tmp_path):
    small = tmp_path / "g.wav"
    big = tmp_path / "h.wav"
    small.write_bytes(make_wav(data_bytes=8000))
    big.write_bytes(make_wav(data_bytes=16000))
    assert probe_wav_duration(big) == 2 * probe_wav_duration(small)


# -- backends ----------------------------------------------------------------


def test_parse_backend_spec():
    assert parse_backend_spec("files:./transcripts") == TranscriptFilesBackend(
        directory="./transcripts"
    )
    assert parse_backend_spec("command:asr-cli --fast {audio}") == (
        ExternalCommandBackend(template="asr-cli --fast {audio}")
    )
    assert parse_backend_spec("http:https://host/transcribe") == (
        HttpEndpointBackend(url="https://host/transcribe")
    )
    for bad in ("", "files", "ftp:x"):
        with pytest.raises(ValueError):
            parse_backend_spec(bad)


def test_files_backend_reads_transcript(tmp_path):
    (tmp_path / "s01.txt").write_text("a farmer went out")
    record = _record()
    before = RecordingRecord(**vars(record))
    raw = fetch_transcript(record, TranscriptFilesBackend(str(tmp_path)))
    assert raw.content == "a farmer went out"
    assert raw.source_kind is SourceKind.ASR_TRANSCRIPT
    assert record == before  # fetch never mutates the record


def test_files_backend_missing_file(tmp_path):
    with pytest.raises(BackendError, match="not readable"):
        fetch_transcript(_record(), TranscriptFilesBackend(str(tmp_path)))


def test_command_backend_substitutes_audio(tmp_path):
    audio = tmp_path / "clip.wav"
    audio.write_text("my name is kojo")
    backend = ExternalCommandBackend("cat {audio}")
    raw = fetch_transcript(_record(audio_path=str(audio)), backend)
    assert raw.content == "my name is kojo"


def test_command_backend_requires_audio_path():
    with pytest.raises(BackendError, match="audio_path"):
        fetch_transcript(_record(), ExternalCommandBackend("cat {audio}"))


def test_command_backend_failure_carries_status_and_stderr(tmp_path):
    audio = tmp_path / "clip.wav"
    audio.write_bytes(b"")
    script = (
        f"{sys.executable} -c "
        '"import sys; sys.stderr.write(\'model exploded\'); sys.exit(3)"'
    )
    backend = ExternalCommandBackend(script)
    with pytest.raises(BackendError, match="status 3.*model exploded"):
        fetch_transcript(_record(audio_path=str(audio)), backend)


class _Handler(BaseHTTPRequestHandler):
    payload: bytes = b'{"text": "my name is kojo"}'
    status: int = 200

    def do_POST(self):
        body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
        assert self.headers["Content-Type"] == "audio/wav"
        self.server.last_body = body  # type: ignore[attr-defined]
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(self.payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    thread.join()


def test_http_backend_success(tmp_path, http_server):
    audio = tmp_path / "clip.wav"
    audio.write_bytes(make_wav(data_bytes=64))
    _Handler.payload = b'{"text": "my name is kojo"}'
    _Handler.status = 200
    url = f"http://127.0.0.1:{http_server.server_address[1]}/transcribe"
    raw = fetch_transcript(
        _record(audio_path=str(audio)), HttpEndpointBackend(url)
    )
    assert raw.content == "my name is kojo"
    assert http_server.last_body == audio.read_bytes()


def test_http_backend_non_2xx(tmp_path, http_server):
    audio = tmp_path / "clip.wav"
    audio.write_bytes(b"x")
    _Handler.payload = b"{}"
    _Handler.status = 503
    url = f"http://127.0.0.1:{http_server.server_address[1]}/transcribe"
    with pytest.raises(BackendError, match="503"):
        fetch_transcript(_record(audio_path=str(audio)), HttpEndpointBackend(url))


def test_http_backend_missing_text_field(tmp_path, http_server):
    audio = tmp_path / "clip.wav"
    audio.write_bytes(b"x")
    _Handler.payload = b'{"transcript": "nope"}'
    _Handler.status = 200
    url = f"http://127.0.0.1:{http_server.server_address[1]}/transcribe"
    with pytest.raises(BackendError, match="text"):
        fetch_transcript(_record(audio_path=str(audio)), HttpEndpointBackend(url))


def test_fetch_with_retries_backs_off(tmp_path):
    delays = []
    backend = TranscriptFilesBackend(str(tmp_path))
    path = tmp_path / "s01.txt"

    def fake_sleep(seconds):
        delays.append(seconds)
        if len(delays) == 2:
            path.write_text("recovered")

    with pytest.raises(BackendError):
        fetch_with_retries(_record(), backend, retries=1, sleep=lambda s: delays.append(s))
    assert delays == [1.0]

    delays.clear()
    raw = fetch_with_retries(_record(), backend, retries=3, sleep=fake_sleep)
    assert raw.content == "recovered"
    assert delays == [1.0, 2.0]


def test_fetch_transcripts_parallel_matches_serial(tmp_path):
    records = []
    for k in range(8):
        (tmp_path / f"r{k:02d}.txt").write_text(f"text {k}")
        records.append(_record(f"r{k:02d}"))
    backend = TranscriptFilesBackend(str(tmp_path))
    serial = fetch_transcripts(records, backend, parallelism=1)
    parallel = fetch_transcripts(records, backend, parallelism=4)
    assert {k: v.content for k, v in serial.items()} == {
        k: v.content for k, v in parallel.items()
    }


def test_fetch_transcripts_collects_errors(tmp_path):
    (tmp_path / "ok.txt").write_text("fine")
    records = [_record("ok"), _record("gone")]
    outcome = fetch_transcripts(records, TranscriptFilesBackend(str(tmp_path)))
    assert outcome["ok"].content == "fine"
    assert isinstance(outcome["gone"], BackendError)


def test_record_scoreability():
    assert not _record().is_scoreable
    assert _record(human_error_count=0).is_scoreable
    assert _record(human_transcript="x").is_scoreable
    assert _record(asr_transcript="x").is_scoreable
