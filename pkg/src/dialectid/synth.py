"""Synthetic demo corpus: noise shaped by class-specific formant envelopes.

Each class gets a fixed triple of resonance frequencies (borrowed from
classic vowel formant measurements, so the classes sound plausibly
speech-like and are well separated in the mel spectrum). An utterance is
white noise whose spectrum is multiplied by Gaussian bumps at the class
formants, with small per-utterance jitter in frequency, bandwidth, and
gain so the classes are distributions rather than fixed templates.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import Waveform, save_waveform
from .errors import ConfigurationError
from .train.manifest import Manifest, Utterance, save_manifest

CLASS_FORMANTS = {
    "dialect_a": (730.0, 1090.0, 2440.0),
    "dialect_b": (270.0, 2290.0, 3010.0),
    "dialect_c": (300.0, 870.0, 2240.0),
}

_SPECTRAL_FLOOR = 0.01


def synth_utterance(
    rng: np.random.Generator,
    formants,
    duration_s: float = 2.0,
    sample_rate_hz: int = 16000,
    jitter: float = 0.03,
) -> Waveform:
    n = int(round(duration_s * sample_rate_hz))
    if n < 2:
        raise ConfigurationError(f"duration {duration_s}s too short at {sample_rate_hz} Hz")
    noise = rng.normal(size=n)
    spectrum = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate_hz)
    envelope = np.full_like(freqs, _SPECTRAL_FLOOR)
    for f0 in formants:
        center = f0 * (1.0 + rng.uniform(-jitter, jitter))
        bandwidth = rng.uniform(60.0, 120.0)
        envelope += np.exp(-0.5 * ((freqs - center) / bandwidth) ** 2)
    shaped = np.fft.irfft(spectrum * envelope, n)
    gain = rng.uniform(0.5, 0.9)
    shaped *= gain / np.abs(shaped).max()
    return Waveform(samples=shaped, sample_rate=sample_rate_hz)


def make_demo_corpus(
    out_dir,
    n_per_class: int = 80,
    train_per_class: int = 60,
    duration_s: float = 2.0,
    sample_rate_hz: int = 16000,
    seed: int = 0,
) -> tuple[Manifest, Manifest]:
    """Write WAVs plus train.tsv / test.tsv; returns the two manifests."""
    if not 0 < train_per_class < n_per_class:
        raise ConfigurationError(
            f"need 0 < train_per_class < n_per_class, got {train_per_class} / {n_per_class}"
        )
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in sorted(CLASS_FORMANTS):
        formants = CLASS_FORMANTS[label]
        for i in range(n_per_class):
            utt_id = f"{label}_{i:03d}"
            wav = synth_utterance(rng, formants, duration_s, sample_rate_hz)
            path = wav_dir / f"{utt_id}.wav"
            save_waveform(path, wav)
            entry = Utterance(utt_id, str(path), label, duration_s)
            (train if i < train_per_class else test).append(entry)
    train_man, test_man = Manifest(train), Manifest(test)
    save_manifest(out_dir / "train.tsv", train_man)
    save_manifest(out_dir / "test.tsv", test_man)
    return train_man, test_man
