"""Augmentation branches: SNR arithmetic, impulse-response convolution,
speed perturbation geometry, and policy determinism."""

import numpy as np
import pytest

from dialectid.audio import Waveform
from dialectid.augment import (
    AugmentPolicy,
    apply_policy,
    convolve_rir,
    mix_noise,
    policy_branch_tags,
    speed_perturb,
)
from dialectid.errors import (
    ConfigurationError,
    DegenerateNoiseError,
    DegenerateSignalError,
)


def measured_snr_db(mixed: Waveform, clean: Waveform) -> float:
    added = mixed.samples - clean.samples
    return 10.0 * np.log10(clean.power() / float(np.mean(np.square(added))))


@pytest.fixture
def speech(rng):
    return Waveform(0.3 * rng.standard_normal(8000), 16000)


@pytest.fixture
def hiss(rng):
    return Waveform(0.1 * rng.standard_normal(5000), 16000)


class TestMixNoise:
    @pytest.mark.parametrize("snr", [0.0, 5.0, 20.0, -3.0])
    def test_achieves_target_snr(self, speech, hiss, snr):
        mixed = mix_noise(speech, hiss, snr)
        assert abs(measured_snr_db(mixed, speech) - snr) < 1e-9

    def test_short_noise_is_tiled(self, speech):
        blip = Waveform(np.array([0.1, -0.1, 0.2]), 16000)
        mixed = mix_noise(speech, blip, 10.0)
        assert len(mixed) == len(speech)
        assert abs(measured_snr_db(mixed, speech) - 10.0) < 1e-9

    def test_noise_resampled_to_signal_rate(self, speech, rng):
        noise = Waveform(0.1 * rng.standard_normal(4000), 8000)
        mixed = mix_noise(speech, noise, 15.0)
        assert mixed.sample_rate == 16000
        assert abs(measured_snr_db(mixed, speech) - 15.0) < 1e-9

    def test_zero_signal_rejected(self, hiss):
        with pytest.raises(DegenerateSignalError):
            mix_noise(Waveform(np.zeros(100), 16000), hiss, 10.0)

    def test_zero_noise_rejected(self, speech):
        with pytest.raises(DegenerateNoiseError):
            mix_noise(speech, Waveform(np.zeros(100), 16000), 10.0)

    def test_empty_noise_rejected(self, speech):
        with pytest.raises(DegenerateNoiseError):
            mix_noise(speech, Waveform(np.zeros(0), 16000), 10.0)


class TestConvolveRir:
    def test_unit_impulse_is_identity(self, speech):
        delta = Waveform(np.array([1.0]), 16000)
        out = convolve_rir(speech, delta)
        np.testing.assert_allclose(out.samples, speech.samples, atol=1e-12)

    def test_length_and_peak_preserved(self, speech, rng):
        rir = Waveform(rng.standard_normal(300) * np.exp(-np.arange(300) / 40.0), 16000)
        out = convolve_rir(speech, rir)
        assert len(out) == len(speech)
        assert abs(np.max(np.abs(out.samples)) - np.max(np.abs(speech.samples))) < 1e-12

    def test_delayed_impulse_shifts(self):
        sig = Waveform(np.array([1.0, 2.0, 3.0, 4.0]), 8000)
        delayed = Waveform(np.array([0.0, 1.0]), 8000)
        out = convolve_rir(sig, delayed)
        # shifted by one sample, then rescaled to the input's peak of 4
        np.testing.assert_allclose(out.samples, [0.0, 4.0 / 3.0, 8.0 / 3.0, 4.0])

    def test_empty_rir_rejected(self, speech):
        with pytest.raises(ConfigurationError):
            convolve_rir(speech, Waveform(np.zeros(0), 16000))


class TestSpeedPerturb:
    def test_factor_one_is_identity(self, speech):
        assert speed_perturb(speech, 1.0) is speech

    def test_output_length_formula(self, speech):
        for factor in (0.9, 1.1, 2.0):
            out = speed_perturb(speech, factor)
            assert len(out) == int(np.floor((len(speech) - 1) / factor)) + 1

    def test_factor_two_takes_every_other_sample(self):
        sig = Waveform(np.arange(9.0), 8000)
        out = speed_perturb(sig, 2.0)
        np.testing.assert_array_equal(out.samples, [0.0, 2.0, 4.0, 6.0, 8.0])

    def test_slowdown_interpolates_ramp(self):
        sig = Waveform(np.arange(10.0), 8000)
        out = speed_perturb(sig, 0.5)
        np.testing.assert_allclose(out.samples, np.arange(19) * 0.5)

    def test_sample_rate_unchanged(self, speech):
        assert speed_perturb(speech, 0.9).sample_rate == speech.sample_rate

    def test_rejects_nonpositive_factor(self, speech):
        with pytest.raises(ConfigurationError):
            speed_perturb(speech, 0.0)


class TestPolicy:
    def test_branch_tags_order(self):
        policy = AugmentPolicy(rir_enabled=True)
        assert policy_branch_tags(policy) == ["clean", "noise", "rir", "speed0.9", "speed1.1"]

    def test_tags_without_noise(self):
        policy = AugmentPolicy(noise_snr_db_range=None, speed_factors=(1.0,))
        assert policy_branch_tags(policy) == ["clean"]

    def test_speed_factors_sorted_and_deduped(self):
        policy = AugmentPolicy(speed_factors=(1.1, 0.9, 1.1, 1.0))
        assert policy.speed_factors == (0.9, 1.0, 1.1)

    def test_reversed_snr_range_rejected(self):
        with pytest.raises(ConfigurationError):
            AugmentPolicy(noise_snr_db_range=(20.0, 5.0))

    def test_nonpositive_speed_rejected(self):
        with pytest.raises(ConfigurationError):
            AugmentPolicy(speed_factors=(0.0, 1.0))

    def test_clean_copy_first_and_count_matches_tags(self, speech, hiss):
        policy = AugmentPolicy(seed=3)
        outs = apply_policy(speech, policy, noise_pool=[hiss])
        assert len(outs) == len(policy_branch_tags(policy))
        assert outs[0] is speech

    def test_deterministic_per_salt(self, speech, hiss, rng):
        pool = [hiss, Waveform(0.2 * rng.standard_normal(3000), 16000)]
        policy = AugmentPolicy(seed=11)
        a = apply_policy(speech, policy, noise_pool=pool, salt="utt1")
        b = apply_policy(speech, policy, noise_pool=pool, salt="utt1")
        for wa, wb in zip(a, b):
            np.testing.assert_array_equal(wa.samples, wb.samples)

    def test_salt_varies_draws(self, speech, hiss, rng):
        pool = [hiss, Waveform(0.2 * rng.standard_normal(3000), 16000)]
        policy = AugmentPolicy(seed=11, noise_snr_db_range=(5.0, 6.0))
        a = apply_policy(speech, policy, noise_pool=pool, salt="utt1")[1]
        b = apply_policy(speech, policy, noise_pool=pool, salt="utt2")[1]
        assert not np.array_equal(a.samples, b.samples)

    def test_seed_varies_draws(self, speech, hiss):
        a = apply_policy(speech, AugmentPolicy(seed=1), noise_pool=[hiss])[1]
        b = apply_policy(speech, AugmentPolicy(seed=2), noise_pool=[hiss])[1]
        assert not np.array_equal(a.samples, b.samples)

    def test_noise_snr_within_configured_range(self, speech, hiss):
        policy = AugmentPolicy(seed=5, noise_snr_db_range=(5.0, 20.0))
        mixed = apply_policy(speech, policy, noise_pool=[hiss])[1]
        assert 5.0 <= measured_snr_db(mixed, speech) <= 20.0

    def test_missing_noise_pool_rejected(self, speech):
        with pytest.raises(ConfigurationError, match="noise pool"):
            apply_policy(speech, AugmentPolicy())

    def test_missing_rir_pool_rejected(self, speech, hiss):
        with pytest.raises(ConfigurationError, match="rir pool"):
            apply_policy(speech, AugmentPolicy(rir_enabled=True), noise_pool=[hiss])
