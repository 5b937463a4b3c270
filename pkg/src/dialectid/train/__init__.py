from .checkpoint import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    Checkpoint,
    checkpoint_from_model,
    load_checkpoint,
    model_from_checkpoint,
    restore_model,
    restore_optimizer,
    rng_from_checkpoint,
    save_checkpoint,
)
from .loop import (
    TrainConfig,
    directory_feature_source,
    sample_segment,
    steps_per_epoch,
    train,
)
from .manifest import Manifest, Utterance, load_manifest, save_manifest
from .optimizer import Adam
from .schedule import triangular_lr

__all__ = [
    "Adam",
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "Manifest",
    "TrainConfig",
    "Utterance",
    "checkpoint_from_model",
    "directory_feature_source",
    "load_checkpoint",
    "load_manifest",
    "model_from_checkpoint",
    "restore_model",
    "restore_optimizer",
    "rng_from_checkpoint",
    "sample_segment",
    "save_checkpoint",
    "save_manifest",
    "steps_per_epoch",
    "train",
    "triangular_lr",
]
