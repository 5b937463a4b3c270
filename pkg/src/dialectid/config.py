"""Run configuration document.

A single JSON file drives every CLI command: feature extraction settings,
augmentation policy, both architectures' hyperparameters, the training
recipe, and inference scoring knobs. Unknown keys are rejected so typos
fail loudly, and each section converts into the corresponding internal
dataclass (which runs that module's own invariant checks).

The default path comes from the DIALECTID_CONFIG environment variable;
absent both the flag and the variable, built-in defaults apply.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from .augment import AugmentPolicy
from .errors import ConfigurationError
from .features import MfccConfig
from .models import EcapaConfig, ResNetConfig
from .train import TrainConfig

CONFIG_ENV_VAR = "DIALECTID_CONFIG"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FeaturesSection(_Section):
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
    apply_dct: bool = True

    def to_mfcc_config(self) -> MfccConfig:
        return MfccConfig(**self.model_dump())


class AugmentationSection(_Section):
    noise_snr_db_range: Optional[tuple[float, float]] = (5.0, 20.0)
    speed_factors: tuple[float, ...] = (0.9, 1.0, 1.1)
    rir_enabled: bool = False
    seed: int = 0

    def to_policy(self) -> AugmentPolicy:
        return AugmentPolicy(**self.model_dump())


class ResnetSection(_Section):
    stage_depths: tuple[int, int, int, int] = (3, 4, 6, 3)
    stage_channels: tuple[int, int, int, int] = (32, 64, 128, 256)
    embed_dim: int = 256
    aam_scale: float = 30.0
    aam_margin: float = 0.4
    pool_use_variance: bool = False

    def to_model_config(self, n_classes: int, in_dim: int) -> ResNetConfig:
        return ResNetConfig(n_classes=n_classes, in_dim=in_dim, **self.model_dump())


class EcapaSection(_Section):
    channels: int = 512
    se_dim: int = 128
    attn_dim: int = 128
    res2_scale: int = 8
    embed_dim: int = 192
    aam_scale: float = 30.0
    aam_margin: float = 0.4
    pool_use_variance: bool = False

    def to_model_config(self, n_classes: int, in_dim: int) -> EcapaConfig:
        return EcapaConfig(n_classes=n_classes, in_dim=in_dim, **self.model_dump())


class TrainingSection(_Section):
    batch_size: int = 32
    epochs_phase1: int = 50
    epochs_total: int = 100
    segment_phase1_s: float = 5.0
    segment_phase2_s: float = 4.0
    lr_min: float = 1e-5
    lr_max: float = 1e-3
    cycle_epochs: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(**self.model_dump())


class InferenceSection(_Section):
    cohort_size: int = 500
    combine_weight: float = 0.5
    cohort_norm: str = "minmax"
    softmax_only: bool = False
    fusion_weights: Optional[list[float]] = None
    seed: int = 0


class RunConfig(_Section):
    features: FeaturesSection = FeaturesSection()
    augmentation: AugmentationSection = AugmentationSection()
    resnet: ResnetSection = ResnetSection()
    ecapa: EcapaSection = EcapaSection()
    training: TrainingSection = TrainingSection()
    inference: InferenceSection = InferenceSection()

    def model_config_for(self, arch: str, n_classes: int, in_dim: int):
        if arch == "resnet34":
            return self.resnet.to_model_config(n_classes, in_dim)
        if arch == "ecapa":
            return self.ecapa.to_model_config(n_classes, in_dim)
        raise ConfigurationError(f"unknown architecture {arch!r}")


def load_run_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Load the JSON config from `path`, the env var, or defaults (in that order)."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return RunConfig()
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigurationError(f"{path}: {where}: {first['msg']}") from exc
    # run the internal dataclass validators so invariant violations surface now
    cfg.features.to_mfcc_config()
    cfg.augmentation.to_policy()
    cfg.training.to_train_config()
    cfg.model_config_for("resnet34", n_classes=2, in_dim=80)
    cfg.model_config_for("ecapa", n_classes=2, in_dim=80)
    return cfg
