"""Audio ingestion and cochleagram persistence.

WAV support is deliberately narrow: RIFF/WAVE, PCM, 16- or 24-bit integer,
mono, no resampling. Anything else is reported with the offending header
field rather than guessed at. Cochleagrams (time x section tap matrices)
are written either as CSV or as a small self-describing binary format:

    magic   4 bytes  b"CARC"
    version u16      currently 1
    n_sections u32
    n_samples  u64
    sample_rate f64
    data    row-major float64, little-endian
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .errors import AudioFormatError, ConfigError

__all__ = [
    "AudioBuffer",
    "read_wav",
    "write_wav",
    "write_cochleagram",
    "read_cochleagram",
    "COCHLEAGRAM_MAGIC",
    "COCHLEAGRAM_VERSION",
]

COCHLEAGRAM_MAGIC = b"CARC"
COCHLEAGRAM_VERSION = 1

_HEADER = struct.Struct("<4sHIQd")


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio normalized to [-1, 1)."""

    sample_rate_hz: int
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", s)
        if s.ndim != 1:
            raise AudioFormatError(f"samples must be mono 1-D, got shape {s.shape}")
        if s.size and (not np.isfinite(s).all() or np.abs(s).max() > 1.0):
            raise AudioFormatError("samples must be finite and within [-1, 1]")


def read_wav(path) -> AudioBuffer:
    """Parse a PCM 16/24-bit mono RIFF/WAVE file; no resampling."""
    with open(path, "rb") as f:
        data = f.read()

    if len(data) < 12:
        raise AudioFormatError(
            f"truncated WAV: {len(data)} bytes, need at least 12", byte_offset=len(data)
        )
    if data[0:4] != b"RIFF":
        raise AudioFormatError("not a RIFF file (bad magic)", byte_offset=0)
    if data[8:12] != b"WAVE":
        raise AudioFormatError("RIFF file is not WAVE", byte_offset=8)

    fmt = None
    data_chunk = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset : offset + 4]
        (chunk_size,) = struct.unpack_from("<I", data, offset + 4)
        body_start = offset + 8
        if body_start + chunk_size > len(data):
            raise AudioFormatError(
                f"truncated chunk {chunk_id!r}: declares {chunk_size} bytes "
                f"but file ends early",
                byte_offset=body_start,
            )
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise AudioFormatError(
                    f"fmt chunk too short ({chunk_size} bytes)", byte_offset=body_start
                )
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            data_chunk = (body_start, chunk_size)
        offset = body_start + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise AudioFormatError("missing fmt chunk")
    audio_format, channels, sample_rate, _byte_rate, block_align, bits = fmt
    if audio_format != 1:
        names = {3: "IEEE float", 6: "A-law", 7: "mu-law", 0xFFFE: "extensible"}
        kind = names.get(audio_format, "unknown")
        raise AudioFormatError(
            f"unsupported AudioFormat={audio_format} ({kind}); only PCM (1) is supported"
        )
    if channels != 1:
        raise AudioFormatError(f"unsupported NumChannels={channels}; only mono is supported")
    if bits not in (16, 24):
        raise AudioFormatError(
            f"unsupported BitsPerSample={bits}; only 16 and 24 are supported"
        )
    if data_chunk is None:
        raise AudioFormatError("missing data chunk")

    start, size = data_chunk
    bytes_per_sample = bits // 8
    if block_align not in (0, bytes_per_sample):
        raise AudioFormatError(
            f"BlockAlign={block_align} inconsistent with mono {bits}-bit PCM"
        )
    if size % bytes_per_sample != 0:
        raise AudioFormatError(
            f"data chunk size {size} is not a whole number of samples",
            byte_offset=start,
        )
    payload = data[start : start + size]
    if bits == 16:
        ints = np.frombuffer(payload, dtype="<i2").astype(np.int32)
    else:
        raw = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
    samples = ints.astype(np.float64) / float(1 << (bits - 1))
    return AudioBuffer(sample_rate_hz=int(sample_rate), samples=samples)


def write_wav(path, buffer: AudioBuffer, bits: int = 16) -> None:
    """Write mono PCM WAV (16-bit only; helper for fixtures and round trips)."""
    if bits != 16:
        raise AudioFormatError(f"only 16-bit writing is supported, got {bits}")
    scaled = np.round(buffer.samples * 32768.0)
    ints = np.clip(scaled, -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    n = len(payload)
    fs = int(buffer.sample_rate_hz)
    header = b"RIFF" + struct.pack("<I", 36 + n) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, fs, fs * 2, 2, 16)
    header += b"data" + struct.pack("<I", n)
    with open(path, "wb") as f:
        f.write(header + payload)


def write_cochleagram(
    outputs: np.ndarray,
    path,
    format: str = "csv",
    sample_rate_hz: float = 0.0,
) -> None:
    """Persist a [n_samples x n_sections] tap matrix as CSV or binary."""
    m = np.asarray(outputs, dtype=np.float64)
    if m.ndim != 2:
        raise ConfigError(f"cochleagram must be 2-D, got shape {m.shape}")
    if m.size and not np.isfinite(m).all():
        raise ConfigError("cochleagram contains non-finite values")
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["t"] + [f"y_{k}" for k in range(m.shape[1])])
            for t in range(m.shape[0]):
                w.writerow([t] + [format_float(v) for v in m[t]])
    elif format == "binary":
        with open(path, "wb") as f:
            f.write(
                _HEADER.pack(
                    COCHLEAGRAM_MAGIC,
                    COCHLEAGRAM_VERSION,
                    m.shape[1],
                    m.shape[0],
                    float(sample_rate_hz),
                )
            )
            f.write(np.ascontiguousarray(m, dtype="<f8").tobytes())
    else:
        raise ConfigError(f"unknown cochleagram format: {format!r}")


def format_float(v: float) -> str:
    return format(v, ".17g")


def read_cochleagram(path) -> tuple[np.ndarray, float | None]:
    """Read either cochleagram format; returns (matrix, sample_rate or None).

    The CSV format does not carry the sample rate, so it comes back None.
    """
    with open(path, "rb") as f:
        head = f.read(4)
    if head == COCHLEAGRAM_MAGIC:
        return _read_cochleagram_binary(path)
    return _read_cochleagram_csv(path), None


def _read_cochleagram_binary(path) -> tuple[np.ndarray, float]:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ConfigError(f"truncated cochleagram header in {path}")
        magic, version, n_sections, n_samples, fs = _HEADER.unpack(header)
        if magic != COCHLEAGRAM_MAGIC:
            raise ConfigError(f"bad cochleagram magic in {path}")
        if version != COCHLEAGRAM_VERSION:
            raise ConfigError(f"unsupported cochleagram version {version}")
        body = f.read()
    expected = n_sections * n_samples * 8
    if len(body) != expected:
        raise ConfigError(
            f"cochleagram payload is {len(body)} bytes, expected {expected}"
        )
    m = np.frombuffer(body, dtype="<f8").reshape(n_samples, n_sections).copy()
    return m, fs


def _read_cochleagram_csv(path) -> np.ndarray:
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or not header or header[0] != "t":
            raise ConfigError(f"bad cochleagram CSV header in {path}")
        n_sections = len(header) - 1
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != n_sections + 1:
                raise ConfigError(f"cochleagram row has {len(row)} fields, expected {n_sections + 1}")
            rows.append([float(v) for v in row[1:]])
    return np.array(rows, dtype=np.float64).reshape(len(rows), n_sections)
