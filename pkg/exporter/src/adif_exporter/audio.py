"""PCM16 WAV decoding for the export path.

The upstream pipeline stores 16 kHz mono PCM16; anything else is treated
as a per-file failure rather than silently resampled, since the encoder
checkpoint is only meaningful at its native rate.
"""

from __future__ import annotations

import wave

import numpy as np

SAMPLE_RATE = 16000


class AudioError(ValueError):
    pass


def load_wav_16k(path) -> np.ndarray:
    """Decode to mono float32 in [-1, 1]; rejects non-16k and non-PCM16."""
    try:
        with wave.open(str(path), "rb") as fh:
            n_channels = fh.getnchannels()
            sampwidth = fh.getsampwidth()
            rate = fh.getframerate()
            n_frames = fh.getnframes()
            raw = fh.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise AudioError(f"{path}: not a readable WAV file: {exc}") from exc
    if sampwidth != 2:
        raise AudioError(f"{path}: only PCM16 input is supported, got {8 * sampwidth}-bit")
    if rate != SAMPLE_RATE:
        raise AudioError(f"{path}: expected {SAMPLE_RATE} Hz audio, got {rate} Hz")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
    if n_channels > 1:
        data = data[: (len(data) // n_channels) * n_channels]
        data = data.reshape(-1, n_channels).mean(axis=1)
    if len(data) == 0:
        raise AudioError(f"{path}: empty audio stream")
    return data
