"""Two-phase training loop.

Epochs before `epochs_phase1` draw longer random segments than the rest of
the run; every weight update uses Adam with a triangular learning-rate
cycle whose period is `cycle_epochs` worth of optimizer steps. A single
Generator seeded from the config drives shuffling and segment starts, so a
(seed, manifest, config) triple maps to one exact sequence of updates.

Features are looked up by utterance id, either from a mapping or from any
callable; `directory_feature_source` covers the common on-disk layout of
one `<utt_id>.adif` per utterance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from ..adif import read_feature_file
from ..errors import ConfigurationError, DimensionError
from ..features import FeatureMatrix
from ..models import EcapaConfig, Model, ResNetConfig, build_ecapa, build_resnet34
from ..nn.heads import SoftmaxCrossEntropy
from .checkpoint import (
    Checkpoint,
    checkpoint_from_model,
    model_from_checkpoint,
    restore_optimizer,
    rng_from_checkpoint,
)
from .manifest import Manifest
from .optimizer import Adam
from .schedule import triangular_lr

FeatureSource = Callable[[str], FeatureMatrix]


@dataclass(frozen=True)
class TrainConfig:
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

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigurationError("batch_size must be >= 2 (batch statistics)")
        if self.epochs_phase1 < 0 or self.epochs_total < 0:
            raise ConfigurationError("epoch counts must be >= 0")
        if self.epochs_total > 0 and self.epochs_phase1 > self.epochs_total:
            raise ConfigurationError(
                f"epochs_phase1 ({self.epochs_phase1}) exceeds "
                f"epochs_total ({self.epochs_total})"
            )
        if self.segment_phase1_s <= 0 or self.segment_phase2_s <= 0:
            raise ConfigurationError("segment durations must be positive")
        if not self.lr_min < self.lr_max:
            raise ConfigurationError(
                f"need lr_min < lr_max, got {self.lr_min} >= {self.lr_max}"
            )
        if self.cycle_epochs < 1:
            raise ConfigurationError("cycle_epochs must be >= 1")


def sample_segment(feat: FeatureMatrix, duration_s: float, rng: np.random.Generator) -> FeatureMatrix:
    """Cut a random fixed-length slice, wrapping short utterances cyclically."""
    if duration_s <= 0:
        raise ConfigurationError(f"duration_s must be positive, got {duration_s}")
    target = math.ceil(duration_s * 1000.0 / feat.frame_shift_ms)
    n = feat.n_frames
    if n >= target:
        start = int(rng.integers(0, n - target + 1))
        data = feat.data[start : start + target]
    else:
        # row-major np.resize repeats whole rows, i.e. frame k = frame k mod n
        data = np.resize(feat.data, (target, feat.dim))
    return FeatureMatrix(data=data, frame_shift_ms=feat.frame_shift_ms, source=feat.source)


def steps_per_epoch(n_utterances: int, batch_size: int) -> int:
    """Batches per epoch; a lone remainder utterance is dropped."""
    steps = math.ceil(n_utterances / batch_size)
    if n_utterances % batch_size == 1 and n_utterances > 1:
        steps -= 1
    return steps


def directory_feature_source(directory) -> FeatureSource:
    directory = Path(directory)

    def load(utt_id: str) -> FeatureMatrix:
        return read_feature_file(directory / f"{utt_id}.adif")

    return load


def _resolve_source(features) -> FeatureSource:
    if isinstance(features, Mapping):
        return features.__getitem__
    if callable(features):
        return features
    raise ConfigurationError(
        "features must be a mapping or a callable from utterance id to features"
    )


def _build_model(arch: str, n_classes: int, in_dim: int, model_cfg, seed: int) -> Model:
    if arch == "resnet34":
        cfg = model_cfg or ResNetConfig(n_classes=n_classes, in_dim=in_dim)
        builder = build_resnet34
    elif arch == "ecapa":
        cfg = model_cfg or EcapaConfig(n_classes=n_classes, in_dim=in_dim)
        builder = build_ecapa
    else:
        raise ConfigurationError(f"unknown architecture {arch!r}")
    if cfg.n_classes != n_classes:
        raise ConfigurationError(
            f"model config expects {cfg.n_classes} classes, manifest has {n_classes}"
        )
    return builder(cfg, seed=seed)


def train(
    manifest: Manifest,
    features,
    arch: str = "resnet34",
    cfg: TrainConfig = TrainConfig(),
    model_cfg=None,
    log=None,
    resume: Checkpoint | None = None,
) -> Checkpoint:
    """Run the two-phase loop and return the final training state.

    `log` is any object with a write method; one line per epoch goes out as
    `epoch<TAB>loss<TAB>train_acc<TAB>lr`. Pass `resume` to continue a run
    from the checkpoint's epoch counter; the result is identical to never
    having stopped.
    """
    if manifest.n_classes < 2:
        raise ConfigurationError(f"need >= 2 classes, got {manifest.n_classes}")
    for label, members in zip(manifest.labels, manifest.by_class().values()):
        if not members:
            raise ConfigurationError(f"class {label!r} has no utterances")
    source = _resolve_source(features)

    feats = [source(u.utt_id) for u in manifest]
    labels = np.array([manifest.label_index(u.label) for u in manifest], dtype=np.int64)
    shift = feats[0].frame_shift_ms
    in_dim = feats[0].dim
    for u, f in zip(manifest, feats):
        if f.frame_shift_ms != shift or f.dim != in_dim:
            raise DimensionError(
                f"features for {u.utt_id!r} have shift {f.frame_shift_ms} ms / dim "
                f"{f.dim}, expected {shift} ms / dim {in_dim}"
            )

    n = len(manifest)
    steps = steps_per_epoch(n, cfg.batch_size)
    if steps == 0:
        raise ConfigurationError(
            f"{n} utterances with batch_size {cfg.batch_size} yields no usable batch"
        )
    period = cfg.cycle_epochs * steps

    if resume is not None:
        if resume.kind != arch:
            raise ConfigurationError(
                f"resume checkpoint is {resume.kind!r} but arch is {arch!r}"
            )
        model = model_from_checkpoint(resume)
        if model.cfg.n_classes != manifest.n_classes:
            raise ConfigurationError(
                f"checkpoint expects {model.cfg.n_classes} classes, "
                f"manifest has {manifest.n_classes}"
            )
        optimizer = Adam(model, cfg.beta1, cfg.beta2, cfg.adam_eps)
        restore_optimizer(optimizer, resume)
        rng = rng_from_checkpoint(resume)
        start_epoch = resume.epoch
    else:
        model = _build_model(arch, manifest.n_classes, in_dim, model_cfg, cfg.seed)
        optimizer = Adam(model, cfg.beta1, cfg.beta2, cfg.adam_eps)
        rng = np.random.default_rng(cfg.seed)
        start_epoch = 0

    ce = SoftmaxCrossEntropy()
    global_step = start_epoch * steps
    model.train()
    for epoch in range(start_epoch, cfg.epochs_total):
        seg_s = cfg.segment_phase1_s if epoch < cfg.epochs_phase1 else cfg.segment_phase2_s
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        seen = 0
        lr = cfg.lr_min
        for b in range(0, n, cfg.batch_size):
            chunk = order[b : b + cfg.batch_size]
            if len(chunk) < 2:
                continue
            x = np.stack([sample_segment(feats[i], seg_s, rng).data.T for i in chunk])
            y = labels[chunk]
            lr = triangular_lr(global_step, cfg.lr_min, cfg.lr_max, period)
            logits = model.forward(x, y)
            loss = ce.forward(logits, y)
            loss_sum += loss * len(chunk)
            correct += int((logits.argmax(axis=1) == y).sum())
            seen += len(chunk)
            model.zero_grad()
            model.backward(ce.backward())
            optimizer.step(lr)
            global_step += 1
        if log is not None:
            log.write(
                f"{epoch + 1}\t{loss_sum / seen:.6f}\t{correct / seen:.4f}\t{lr:.8f}\n"
            )
    return checkpoint_from_model(model, epoch=cfg.epochs_total, optimizer=optimizer, rng=rng)
