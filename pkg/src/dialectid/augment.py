"""Offline waveform augmentation for training-set preparation.

Three branches: additive noise at a target SNR, impulse-response convolution,
and speed perturbation by resampling. A seeded policy turns one utterance into
a deterministic list of copies (the clean one first).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .audio import Waveform, linear_interp, resample
from .errors import ConfigurationError, DegenerateNoiseError, DegenerateSignalError

DEFAULT_SPEED_FACTORS = (0.9, 1.0, 1.1)


@dataclass(frozen=True)
class AugmentPolicy:
    noise_snr_db_range: tuple[float, float] | None = (5.0, 20.0)
    speed_factors: tuple[float, ...] = DEFAULT_SPEED_FACTORS
    rir_enabled: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.noise_snr_db_range is not None:
            lo, hi = self.noise_snr_db_range
            if lo > hi:
                raise ConfigurationError(f"SNR range lo ({lo}) > hi ({hi})")
        if any(f <= 0 for f in self.speed_factors):
            raise ConfigurationError("speed factors must be positive")
        object.__setattr__(self, "speed_factors", tuple(sorted(set(self.speed_factors))))

    @property
    def noise_enabled(self) -> bool:
        return self.noise_snr_db_range is not None


def mix_noise(signal: Waveform, noise: Waveform, snr_db: float) -> Waveform:
    """Add noise scaled so the output SNR equals snr_db.

    Gain g = sqrt(P_signal / (P_noise * 10^(snr/10))) with P the mean squared
    amplitude; the noise is resampled to the signal's rate and tiled or
    truncated to the signal's length before measuring its power.
    """
    if noise.sample_rate != signal.sample_rate:
        noise = resample(noise, signal.sample_rate)
    n = len(signal)
    if len(noise) == 0:
        raise DegenerateNoiseError("empty noise waveform")
    reps = int(np.ceil(n / len(noise)))
    noise_fit = np.tile(noise.samples, reps)[:n]

    p_signal = signal.power()
    p_noise = float(np.mean(np.square(noise_fit)))
    if p_signal == 0.0:
        raise DegenerateSignalError("signal has zero power; SNR is undefined")
    if p_noise == 0.0:
        raise DegenerateNoiseError("noise has zero power; cannot reach a target SNR")

    gain = np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    return Waveform(signal.samples + gain * noise_fit, signal.sample_rate)


def convolve_rir(signal: Waveform, rir: Waveform) -> Waveform:
    """Convolve with an impulse response, keep the signal's length and peak."""
    if len(rir) == 0:
        raise ConfigurationError("empty impulse response")
    if rir.sample_rate != signal.sample_rate:
        rir = resample(rir, signal.sample_rate)
    out = fftconvolve(signal.samples, rir.samples, mode="full")[: len(signal)]
    peak_in = float(np.max(np.abs(signal.samples))) if len(signal) else 0.0
    peak_out = float(np.max(np.abs(out))) if len(out) else 0.0
    if peak_out > 0.0 and peak_in > 0.0:
        out = out * (peak_in / peak_out)
    return Waveform(out, signal.sample_rate)


def speed_perturb(signal: Waveform, factor: float) -> Waveform:
    """Resample at positions i * factor; output length floor((N-1)/factor) + 1.

    Linear-interpolation resampling changes tempo and pitch together. The
    utterance's class label is unaffected.
    """
    if factor <= 0:
        raise ConfigurationError(f"speed factor must be positive, got {factor}")
    n = len(signal)
    if n < 2 or factor == 1.0:
        return signal
    n_out = int(np.floor((n - 1) / factor)) + 1
    positions = np.arange(n_out) * factor
    return Waveform(linear_interp(signal.samples, positions), signal.sample_rate)


def policy_branch_tags(policy: AugmentPolicy) -> list[str]:
    """Tags naming each output of apply_policy, in emission order."""
    tags = ["clean"]
    if policy.noise_enabled:
        tags.append("noise")
    if policy.rir_enabled:
        tags.append("rir")
    tags.extend(f"speed{f:g}" for f in policy.speed_factors if f != 1.0)
    return tags


def _policy_rng(policy: AugmentPolicy, salt: str | None) -> np.random.Generator:
    keys = [policy.seed & 0xFFFFFFFF]
    if salt is not None:
        keys.append(zlib.crc32(salt.encode("utf-8")))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))


def apply_policy(
    signal: Waveform,
    policy: AugmentPolicy,
    noise_pool: list[Waveform] = (),
    rir_pool: list[Waveform] = (),
    salt: str | None = None,
) -> list[Waveform]:
    """Emit the clean copy plus one copy per enabled branch.

    Deterministic in (signal, policy, pools, salt); `salt` lets callers vary
    the draws per utterance while keeping one corpus-level seed. Output order
    matches policy_branch_tags(policy).
    """
    if policy.noise_enabled and not noise_pool:
        raise ConfigurationError("noise branch enabled but the noise pool is empty")
    if policy.rir_enabled and not rir_pool:
        raise ConfigurationError("rir branch enabled but the rir pool is empty")

    rng = _policy_rng(policy, salt)
    out = [signal]
    if policy.noise_enabled:
        lo, hi = policy.noise_snr_db_range
        noise = noise_pool[int(rng.integers(len(noise_pool)))]
        snr = float(rng.uniform(lo, hi))
        out.append(mix_noise(signal, noise, snr))
    if policy.rir_enabled:
        rir = rir_pool[int(rng.integers(len(rir_pool)))]
        out.append(convolve_rir(signal, rir))
    for factor in policy.speed_factors:
        if factor != 1.0:
            out.append(speed_perturb(signal, factor))
    return out
