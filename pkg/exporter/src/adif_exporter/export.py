"""Batch export of frozen-encoder frame features to ADIF files.

The encoder is a pretrained UniSpeech-SAT checkpoint run in eval mode with
gradients disabled; its final hidden layer provides the per-frame vectors
(1024-dim for the Large checkpoint, one frame per 20 ms of input). Which
intermediate layer would serve a downstream classifier best is an open
question; this tool deliberately exposes only the final layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import UniSpeechSatModel

from .adif import write_adif
from .audio import SAMPLE_RATE, AudioError, load_wav_16k
from .manifest import parse_manifest

DEFAULT_CHECKPOINT = "microsoft/unispeech-sat-large"
_NORM_EPS = 1e-7


@dataclass(frozen=True)
class ExporterConfig:
    checkpoint: str = DEFAULT_CHECKPOINT
    layer: str = "final"
    device: str = "cpu"
    batch_size: int = 1
    normalize: bool = True  # per-utterance zero-mean/unit-variance input

    def __post_init__(self):
        if self.layer != "final":
            raise ValueError(f"only the final hidden layer is supported, got {self.layer!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class ExportSummary:
    written: int = 0
    skipped: int = 0
    failed: int = 0
    errors: list = field(default_factory=list)  # (utt_id, message) pairs


def load_model(cfg: ExporterConfig) -> UniSpeechSatModel:
    """Fetch the checkpoint and freeze it."""
    try:
        model = UniSpeechSatModel.from_pretrained(cfg.checkpoint)
    except Exception as exc:  # pragma: no cover - needs a network failure
        raise RuntimeError(f"cannot load encoder checkpoint {cfg.checkpoint!r}: {exc}") from exc
    return freeze(model.to(cfg.device))


def freeze(model: UniSpeechSatModel) -> UniSpeechSatModel:
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def frame_shift_ms(model: UniSpeechSatModel) -> float:
    """Native stride of the convolutional front end, in milliseconds."""
    return 1000.0 * math.prod(model.config.conv_stride) / SAMPLE_RATE


def n_output_frames(model: UniSpeechSatModel, n_samples: int) -> int:
    n = n_samples
    for kernel, stride in zip(model.config.conv_kernel, model.config.conv_stride):
        n = (n - kernel) // stride + 1
    return n


def embed_batch(model: UniSpeechSatModel, samples: list[np.ndarray],
                cfg: ExporterConfig) -> list[np.ndarray]:
    """Equal-length utterances -> per-utterance (frames, hidden) float32 arrays."""
    stacked = np.stack([s.astype(np.float32) for s in samples])
    if cfg.normalize:
        mean = stacked.mean(axis=1, keepdims=True)
        var = stacked.var(axis=1, keepdims=True)
        stacked = (stacked - mean) / np.sqrt(var + _NORM_EPS)
    with torch.no_grad():
        hidden = model(torch.from_numpy(stacked).to(cfg.device)).last_hidden_state
    out = hidden.cpu().numpy().astype(np.float32)
    return [out[i] for i in range(out.shape[0])]


def export(manifest_path, out_dir, cfg: ExporterConfig, model=None,
           force: bool = False, log=None) -> ExportSummary:
    """Write one `<utt_id>.adif` per manifest entry; skip files already present.

    Per-file decode or length failures are collected in the summary rather
    than aborting the batch. Utterances of identical length are forwarded
    together in groups of up to ``cfg.batch_size``. ``model`` can be passed
    in to reuse a loaded encoder (tests inject a small randomly initialized
    one).
    """
    entries = parse_manifest(manifest_path)
    if model is None:
        model = load_model(cfg)
    else:
        model = freeze(model)
    shift = frame_shift_ms(model)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = ExportSummary()

    def fail(utt_id: str, message: str) -> None:
        summary.failed += 1
        summary.errors.append((utt_id, message))
        if log is not None:
            log.write(f"error: {utt_id}: {message}\n")

    pending = []  # (entry, samples) with a single shared length

    def flush() -> None:
        if not pending:
            return
        features = embed_batch(model, [s for _, s in pending], cfg)
        for (entry, _), feat in zip(pending, features):
            try:
                write_adif(out_dir / f"{entry.utt_id}.adif", feat, shift)
                summary.written += 1
            except (OSError, ValueError) as exc:
                fail(entry.utt_id, str(exc))
        pending.clear()

    for entry in entries:
        if (out_dir / f"{entry.utt_id}.adif").exists() and not force:
            summary.skipped += 1
            continue
        try:
            samples = load_wav_16k(entry.path)
        except (AudioError, OSError) as exc:
            fail(entry.utt_id, str(exc))
            continue
        if n_output_frames(model, len(samples)) < 1:
            fail(entry.utt_id, "utterance too short for one encoder frame")
            continue
        if pending and (len(samples) != len(pending[0][1]) or len(pending) >= cfg.batch_size):
            flush()
        pending.append((entry, samples))
    flush()
    return summary
