"""Model base class and the feature-level entry points.

A model couples a body (feature map extractor + pooling + embedding layer)
with a margin-softmax head. `embed` produces utterance embeddings; calling
the model with labels produces training logits; `backward` runs the whole
graph in reverse. The `kind` tag is fixed per subclass and identifies the
architecture in checkpoints.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError
from ..features import FeatureMatrix
from ..nn import Module

MODEL_KINDS = ("resnet34", "ecapa")


class Model(Module):
    kind: str = ""

    def __init__(self, cfg):
        super().__init__()
        object.__setattr__(self, "cfg", cfg)

    def embed(self, x: np.ndarray) -> np.ndarray:
        """(B, in_dim, T) feature batch -> (B, embed_dim) embeddings."""
        raise NotImplementedError

    def backward_embed(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def forward(self, x: np.ndarray, label=None) -> np.ndarray:
        """(B, in_dim, T) -> (B, n_classes) logits (margin applied if labeled)."""
        return self.head.forward(self.embed(x), label)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return self.backward_embed(self.head.backward(grad))

    def check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 3 or x.shape[1] != self.cfg.in_dim:
            raise DimensionError(
                f"{self.kind} expects (B, {self.cfg.in_dim}, T) features, got {x.shape}"
            )
        return x


def _as_batch(model: Model, feat: FeatureMatrix) -> np.ndarray:
    if feat.data.shape[1] != model.cfg.in_dim:
        raise DimensionError(
            f"{model.kind} was built for {model.cfg.in_dim}-dim features, "
            f"got {feat.data.shape[1]}-dim"
        )
    return np.ascontiguousarray(feat.data.T, dtype=np.float32)[None, :, :]


def forward_embed(model: Model, feat: FeatureMatrix) -> np.ndarray:
    """One utterance's (frames x dim) features -> (embed_dim,) embedding."""
    return model.embed(_as_batch(model, feat))[0]


def forward_logits(model: Model, feat: FeatureMatrix, label=None) -> np.ndarray:
    """One utterance's features -> (n_classes,) scaled-cosine logits."""
    labels = None if label is None else np.asarray([label])
    return model.forward(_as_batch(model, feat), labels)[0]
