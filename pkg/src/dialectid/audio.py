"""Waveform container and RIFF/WAVE file I/O.

Only the two encodings the toolkit produces and consumes are supported:
16-bit PCM and 32-bit IEEE float, mono or multichannel (averaged to mono
on load). Everything else is rejected with a distinct error class.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioFormatError, ConfigurationError, UnsupportedEncodingError

_PCM16_SCALE = 32768.0

# wFormatTag values from the RIFF spec.
_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class Waveform:
    """Mono audio: float samples nominally in [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def power(self) -> float:
        """Mean squared amplitude."""
        if len(self.samples) == 0:
            return 0.0
        return float(np.mean(np.square(self.samples)))


def linear_interp(x: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Sample `x` at fractional `positions` by linear interpolation.

    Positions landing exactly on an integer index return that sample
    bit-exactly; positions are clamped to [0, len(x) - 1].
    """
    x = np.asarray(x, dtype=np.float64)
    pos = np.clip(positions, 0.0, len(x) - 1.0)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, len(x) - 1)
    frac = pos - lo
    return x[lo] + frac * (x[hi] - x[lo])


def resample(wav: Waveform, target_rate: int) -> Waveform:
    """Resample to `target_rate` by linear interpolation."""
    if target_rate <= 0:
        raise ConfigurationError(f"target_rate must be positive, got {target_rate}")
    if target_rate == wav.sample_rate:
        return wav
    if len(wav) == 0:
        return Waveform(wav.samples, target_rate)
    ratio = wav.sample_rate / target_rate
    n_out = int(np.floor((len(wav) - 1) / ratio)) + 1
    positions = np.arange(n_out) * ratio
    return Waveform(linear_interp(wav.samples, positions), target_rate)


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise AudioFormatError(f"truncated WAV file while reading {what}")
    return data


def load_waveform(path: str | Path) -> Waveform:
    """Decode a RIFF/WAVE file to a mono Waveform.

    Multichannel input is averaged across channels; PCM16 samples are
    scaled by 1/32768. The sample rate is taken from the fmt chunk.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        riff, _size, wave = struct.unpack("<4sI4s", _read_exact(fh, 12, "RIFF header"))
        if riff != b"RIFF" or wave != b"WAVE":
            raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

        fmt = None
        while True:
            chunk_hdr = fh.read(8)
            if len(chunk_hdr) == 0:
                raise AudioFormatError(f"{path}: missing data chunk")
            if len(chunk_hdr) < 8:
                raise AudioFormatError(f"{path}: truncated chunk header")
            chunk_id, chunk_size = struct.unpack("<4sI", chunk_hdr)
            if chunk_id == b"fmt ":
                if chunk_size < 16:
                    raise AudioFormatError(f"{path}: fmt chunk too small")
                fmt = struct.unpack("<HHIIHH", _read_exact(fh, 16, "fmt chunk"))
                fh.read(chunk_size - 16 + (chunk_size & 1))
            elif chunk_id == b"data":
                if fmt is None:
                    raise AudioFormatError(f"{path}: data chunk before fmt chunk")
                raw = _read_exact(fh, chunk_size, "sample data")
                break
            else:
                fh.read(chunk_size + (chunk_size & 1))

    format_tag, n_channels, sample_rate, _brate, _balign, bits = fmt
    if n_channels < 1:
        raise AudioFormatError(f"{path}: zero channels")
    if format_tag == _FMT_PCM and bits == 16:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM16_SCALE
    elif format_tag == _FMT_IEEE_FLOAT and bits == 32:
        data = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: unsupported encoding (format tag {format_tag}, {bits}-bit); "
            "only PCM16 and IEEE float32 are readable"
        )

    frames = len(data) // n_channels
    data = data[: frames * n_channels].reshape(frames, n_channels)
    mono = data.mean(axis=1)
    return Waveform(mono, int(sample_rate))


def save_waveform(path: str | Path, wav: Waveform, encoding: str = "pcm16") -> None:
    """Write a mono WAV file as PCM16 or IEEE float32."""
    samples = np.asarray(wav.samples, dtype=np.float64)
    if encoding == "pcm16":
        format_tag, bits = _FMT_PCM, 16
        ints = np.clip(np.round(samples * _PCM16_SCALE), -32768, 32767).astype("<i2")
        payload = ints.tobytes()
    elif encoding == "float32":
        format_tag, bits = _FMT_IEEE_FLOAT, 32
        payload = samples.astype("<f4").tobytes()
    else:
        raise ConfigurationError(f"unknown encoding {encoding!r}")

    byte_rate = wav.sample_rate * bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        format_tag,
        1,
        wav.sample_rate,
        byte_rate,
        bits // 8,
        bits,
        b"data",
        len(payload),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
