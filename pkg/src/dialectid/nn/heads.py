"""Cosine classifier with additive angular margin, softmax, cross-entropy.

The head length-normalizes both the embedding and each class weight row, so
logits are scaled cosines. In training the true class's angle is penalized by
the margin: logit_y = s * cos(theta_y + m). Once theta_y + m would pass pi
(cos no longer monotone) the logit falls back to the linear surrogate
s * (cos(theta_y) - m * sin(m)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DimensionError, NormalizationError
from .core import Module, Parameter, he_uniform

_COS_CLIP = 1e-7


@dataclass(frozen=True)
class AamConfig:
    n_classes: int
    embed_dim: int
    scale: float = 30.0
    margin: float = 0.4

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigurationError("scale must be positive")
        if not 0 <= self.margin < np.pi / 2:
            raise ConfigurationError("margin must lie in [0, pi/2)")
        if self.n_classes < 2:
            raise ConfigurationError("need at least 2 classes")


def _normalize_rows(x, what):
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise NormalizationError(f"zero-norm {what} cannot be length-normalized")
    return x / norms, norms


class AamHead(Module):
    def __init__(self, cfg: AamConfig, rng=None, dtype=np.float32):
        super().__init__()
        self.cfg = cfg
        rng = rng or np.random.default_rng(0)
        self.weight = Parameter(
            he_uniform(rng, (cfg.n_classes, cfg.embed_dim), cfg.embed_dim, dtype)
        )

    def forward(self, embedding, label=None):
        """(B, D) embeddings -> (B, K) logits; margin applied when labels given."""
        cfg = self.cfg
        if embedding.ndim != 2 or embedding.shape[1] != cfg.embed_dim:
            raise DimensionError(
                f"AAM head expects (B, {cfg.embed_dim}) embeddings, got {embedding.shape}"
            )
        e_hat, e_norm = _normalize_rows(embedding, "embedding")
        w_hat, _ = _normalize_rows(self.weight.value, "class weight row")
        cos = e_hat @ w_hat.T

        self._e_hat, self._e_norm, self._w_hat, self._cos = e_hat, e_norm, w_hat, cos
        self._label = None if cfg.margin == 0.0 else label

        if label is None or cfg.margin == 0.0:
            return cfg.scale * cos

        rows = np.arange(cos.shape[0])
        c = cos[rows, label]
        sin_theta = np.sqrt(np.clip(1.0 - c * c, 0.0, 1.0))
        cos_m, sin_m = np.cos(cfg.margin), np.sin(cfg.margin)
        threshold = np.cos(np.pi - cfg.margin)
        penalized = np.where(
            c > threshold,
            c * cos_m - sin_theta * sin_m,
            c - cfg.margin * sin_m,
        )
        logits = cfg.scale * cos
        logits[rows, label] = cfg.scale * penalized
        self._margin_c = c
        self._margin_sin = sin_theta
        return logits

    def backward(self, grad):
        cfg = self.cfg
        gcos = cfg.scale * grad
        if self._label is not None:
            rows = np.arange(gcos.shape[0])
            c = self._margin_c
            cos_m, sin_m = np.cos(cfg.margin), np.sin(cfg.margin)
            threshold = np.cos(np.pi - cfg.margin)
            # d/dc of cos(arccos c + m) diverges at |c| = 1; the floor keeps
            # the step finite for exactly-aligned embeddings
            dphi = np.where(
                c > threshold,
                cos_m + c / np.maximum(self._margin_sin, _COS_CLIP) * sin_m,
                1.0,
            )
            gcos = gcos.copy()
            gcos[rows, self._label] *= dphi

        e_hat, w_hat = self._e_hat, self._w_hat
        ge_hat = gcos @ w_hat
        gw_hat = gcos.T @ e_hat
        ge = (ge_hat - (ge_hat * e_hat).sum(axis=1, keepdims=True) * e_hat) / self._e_norm
        w_norm = np.linalg.norm(self.weight.value, axis=1, keepdims=True)
        self.weight.grad += (
            gw_hat - (gw_hat * w_hat).sum(axis=1, keepdims=True) * w_hat
        ) / w_norm
        return ge


def aam_logits(embedding, weights, cfg: AamConfig, label=None):
    """Functional single-utterance form: (D,) embedding -> (K,) logits."""
    head = AamHead.__new__(AamHead)
    Module.__init__(head)
    head.cfg = cfg
    head.weight = Parameter(np.asarray(weights))
    out = head.forward(
        np.asarray(embedding)[None, :],
        None if label is None else np.asarray([label]),
    )
    return out[0]


def softmax(logits, axis=-1):
    """Numerically stable softmax."""
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def cross_entropy(logits, label):
    """Mean negative log-probability of the labeled class."""
    probs = softmax(np.atleast_2d(logits))
    labels = np.atleast_1d(label)
    rows = np.arange(probs.shape[0])
    return float(-np.mean(np.log(probs[rows, labels])))


class SoftmaxCrossEntropy(Module):
    """Fused softmax + mean cross-entropy; backward is (p - onehot) / B."""

    def forward(self, logits, label):
        self._probs = softmax(logits)
        self._label = np.asarray(label)
        rows = np.arange(logits.shape[0])
        self._rows = rows
        return float(-np.mean(np.log(self._probs[rows, self._label])))

    def backward(self, grad=1.0):
        g = self._probs.copy()
        g[self._rows, self._label] -= 1.0
        return grad * g / g.shape[0]
