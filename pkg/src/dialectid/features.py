"""MFCC front end: framing, mel filterbank, log energies, DCT, normalization.

The pipeline is pre-emphasis -> Hamming-windowed framing -> magnitude-squared
FFT -> triangular mel filterbank (HTK mel scale) -> floored log -> orthonormal
DCT-II. With n_ceps == n_mels the DCT is square, so the cepstra carry exactly
the filterbank information in a decorrelated basis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from .audio import Waveform, resample
from .errors import ConfigurationError, DimensionError, TooShortError

SOURCE_MFCC = "mfcc"
SOURCE_PRETRAINED = "pretrained"
_SOURCES = (SOURCE_MFCC, SOURCE_PRETRAINED)

INSTANCE_NORM_EPS = 1e-5


@dataclass(frozen=True)
class MfccConfig:
    sample_rate_hz: int = 16000
    win_ms: float = 25.0
    hop_ms: float = 10.0
    fft_size: int = 512
    n_mels: int = 80
    n_ceps: int = 80
    preemphasis: float = 0.97
    fmin_hz: float = 20.0
    fmax_hz: float = 7600.0
    log_floor: float = 1e-10
    apply_dct: bool = True  # False stores the log-mel energies directly

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ConfigurationError("sample_rate_hz must be positive")
        if self.win_ms <= 0 or self.hop_ms <= 0:
            raise ConfigurationError("win_ms and hop_ms must be positive")
        if self.n_ceps > self.n_mels:
            raise ConfigurationError(
                f"n_ceps ({self.n_ceps}) cannot exceed n_mels ({self.n_mels})"
            )
        if self.fft_size < self.win_samples:
            raise ConfigurationError(
                f"fft_size ({self.fft_size}) smaller than window ({self.win_samples} samples)"
            )
        if self.fmax_hz > self.sample_rate_hz / 2:
            raise ConfigurationError(
                f"fmax_hz ({self.fmax_hz}) above Nyquist ({self.sample_rate_hz / 2})"
            )
        if not 0 <= self.fmin_hz < self.fmax_hz:
            raise ConfigurationError("need 0 <= fmin_hz < fmax_hz")
        if self.log_floor <= 0:
            raise ConfigurationError("log_floor must be positive")

    @property
    def win_samples(self) -> int:
        return int(round(self.win_ms * self.sample_rate_hz / 1000.0))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_ms * self.sample_rate_hz / 1000.0))


@dataclass(frozen=True)
class FeatureMatrix:
    """frames x dim feature array plus the metadata the pipeline needs."""

    data: np.ndarray
    frame_shift_ms: float
    source: str

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise DimensionError(f"feature matrix must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionError(f"feature matrix must be non-empty, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("feature matrix contains non-finite values")
        if self.source not in _SOURCES:
            raise ConfigurationError(f"unknown feature source {self.source!r}")
        if self.frame_shift_ms <= 0:
            raise ConfigurationError("frame_shift_ms must be positive")
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def hz_to_mel(hz):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(cfg: MfccConfig) -> np.ndarray:
    """(n_mels, fft_size//2 + 1) triangular weights evaluated at bin centers.

    Triangles are placed uniformly on the mel axis between fmin and fmax and
    evaluated continuously (no snapping of edges to bins), so each filter
    peaks at exactly 1 at its center frequency.
    """
    n_bins = cfg.fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * cfg.sample_rate_hz / cfg.fft_size
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2))
    lo, center, hi = edges_hz[:-2], edges_hz[1:-1], edges_hz[2:]

    up = (bin_hz[None, :] - lo[:, None]) / (center - lo)[:, None]
    down = (hi[:, None] - bin_hz[None, :]) / (hi - center)[:, None]
    return np.maximum(0.0, np.minimum(up, down))


def filter_center_frequencies(cfg: MfccConfig) -> np.ndarray:
    """Center frequency in Hz of each mel filter."""
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2))
    return edges[1:-1]


def frame_count(n_samples: int, win: int, hop: int) -> int:
    """Number of fully-contained analysis frames: floor((N - W) / H) + 1."""
    if n_samples < win:
        return 0
    return (n_samples - win) // hop + 1


def preemphasize(x: np.ndarray, coeff: float) -> np.ndarray:
    """y[0] = x[0], y[t] = x[t] - coeff * x[t-1]."""
    if coeff == 0.0:
        return np.asarray(x, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return np.concatenate(([x[0]], x[1:] - coeff * x[:-1]))


def frame_signal(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    """(n_frames, win) view-copy of overlapping frames."""
    n = frame_count(len(x), win, hop)
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    return x[idx]


def power_spectrum(frames: np.ndarray, fft_size: int) -> np.ndarray:
    """Magnitude-squared rFFT of windowed frames, (n_frames, fft_size//2+1)."""
    spec = np.fft.rfft(frames, n=fft_size, axis=1)
    return np.square(np.abs(spec))


def log_mel_spectrogram(wav: Waveform, cfg: MfccConfig = MfccConfig()) -> np.ndarray:
    """(n_frames, n_mels) floored-log filterbank energies, float64."""
    if wav.sample_rate != cfg.sample_rate_hz:
        wav = resample(wav, cfg.sample_rate_hz)
    x = preemphasize(wav.samples, cfg.preemphasis)
    win, hop = cfg.win_samples, cfg.hop_samples
    if len(x) < win:
        raise TooShortError(
            f"waveform of {len(x)} samples is shorter than one {win}-sample window"
        )
    frames = frame_signal(x, win, hop) * np.hamming(win)[None, :]
    energies = power_spectrum(frames, cfg.fft_size) @ mel_filterbank(cfg).T
    return np.log(np.maximum(energies, cfg.log_floor))


def compute_mfcc(wav: Waveform, cfg: MfccConfig = MfccConfig()) -> FeatureMatrix:
    """Full MFCC front end; returns an un-normalized frames x n_ceps matrix."""
    logmel = log_mel_spectrogram(wav, cfg)
    if cfg.apply_dct:
        feats = dct(logmel, type=2, axis=1, norm="ortho")[:, : cfg.n_ceps]
    else:
        feats = logmel[:, : cfg.n_ceps]
    return FeatureMatrix(feats.astype(np.float32), cfg.hop_ms, SOURCE_MFCC)


def instance_normalize(feat: FeatureMatrix) -> FeatureMatrix:
    """Standardize each coefficient over the utterance's frames.

    Per column: subtract the mean and divide by sqrt(var + 1e-5), so constant
    columns (including single-frame utterances) map to zero.
    """
    data = feat.data.astype(np.float64)
    mean = data.mean(axis=0, keepdims=True)
    var = data.var(axis=0, keepdims=True)
    normed = (data - mean) / np.sqrt(var + INSTANCE_NORM_EPS)
    return replace(feat, data=normed.astype(np.float32))
