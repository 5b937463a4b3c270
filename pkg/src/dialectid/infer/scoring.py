"""Score computation: cohort similarities, normalization, combination, fusion.

A test utterance gets one score vector per system: the softmax over the
head's scaled-cosine logits, averaged 50/50 with the min-max-normalized
mean cosine similarity against each class cohort. Multiple systems fuse by
a convex weight vector (equal weights by default); ties at the top break
toward the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, DimensionError
from ..features import FeatureMatrix
from ..models import Model, forward_embed
from ..nn.heads import softmax
from .cohort import CohortSet, unit_normalize

NORM_METHODS = ("minmax", "znorm", "softmax")

WEIGHT_SUM_TOL = 1e-9


def cohort_scores(embedding: np.ndarray, cohorts: CohortSet) -> np.ndarray:
    """Mean cosine similarity of the test embedding against each class cohort."""
    emb = unit_normalize(np.asarray(embedding, dtype=np.float64))
    if emb.shape != (cohorts.embed_dim,):
        raise DimensionError(
            f"embedding has shape {emb.shape}, cohorts hold {cohorts.embed_dim}-dim vectors"
        )
    return np.array(
        [float(np.mean(block.astype(np.float64) @ emb)) for block in cohorts.embeddings]
    )


def minmax_normalize(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    k = scores.shape[-1]
    if scores.ndim != 1 or k < 2:
        raise DimensionError(f"need a score vector of length >= 2, got shape {scores.shape}")
    lo, hi = scores.min(), scores.max()
    if lo == hi:
        return np.full(k, 1.0 / k)
    return (scores - lo) / (hi - lo)


def znorm_normalize(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    k = scores.shape[-1]
    if scores.ndim != 1 or k < 2:
        raise DimensionError(f"need a score vector of length >= 2, got shape {scores.shape}")
    std = scores.std()
    if std == 0.0:
        return np.full(k, 1.0 / k)
    return (scores - scores.mean()) / std


def normalize_scores(scores: np.ndarray, method: str = "minmax") -> np.ndarray:
    if method == "minmax":
        return minmax_normalize(scores)
    if method == "znorm":
        return znorm_normalize(scores)
    if method == "softmax":
        return softmax(np.asarray(scores, dtype=np.float64))
    raise ConfigurationError(f"unknown normalization method {method!r}; pick from {NORM_METHODS}")


def combine(softmax_probs: np.ndarray, normalized_cohort: np.ndarray, weight: float = 0.5) -> np.ndarray:
    probs = np.asarray(softmax_probs, dtype=np.float64)
    cohort = np.asarray(normalized_cohort, dtype=np.float64)
    if probs.shape != cohort.shape or probs.ndim != 1:
        raise DimensionError(
            f"score vectors must share one length, got {probs.shape} and {cohort.shape}"
        )
    if not 0.0 <= weight <= 1.0:
        raise ConfigurationError(f"combine weight must lie in [0, 1], got {weight}")
    return weight * probs + (1.0 - weight) * cohort


def fuse(system_scores: Sequence[np.ndarray], weights: Sequence[float] | None = None) -> np.ndarray:
    vectors = [np.asarray(v, dtype=np.float64) for v in system_scores]
    if not vectors:
        raise ConfigurationError("fuse needs at least one score vector")
    k = vectors[0].shape
    if any(v.shape != k or v.ndim != 1 for v in vectors):
        raise ConfigurationError(
            f"score vectors must share one length, got shapes {[v.shape for v in vectors]}"
        )
    if weights is None:
        weights = [1.0 / len(vectors)] * len(vectors)
    weights = [float(w) for w in weights]
    if len(weights) != len(vectors):
        raise ConfigurationError(
            f"{len(vectors)} score vectors but {len(weights)} weights"
        )
    total = sum(weights)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ConfigurationError(f"fusion weights must sum to 1 +/- {WEIGHT_SUM_TOL}, got {total!r}")
    out = np.zeros(k)
    for w, v in zip(weights, vectors):
        out += w * v
    return out


@dataclass(frozen=True)
class System:
    """A trained model plus the cohort set built from its training data."""

    model: Model
    cohorts: CohortSet

    def __post_init__(self):
        if self.cohorts.n_classes != self.model.cfg.n_classes:
            raise ConfigurationError(
                f"model has {self.model.cfg.n_classes} classes, "
                f"cohort set has {self.cohorts.n_classes}"
            )
        if self.cohorts.embed_dim != self.model.cfg.embed_dim:
            raise ConfigurationError(
                f"model embeds into {self.model.cfg.embed_dim} dims, "
                f"cohort set holds {self.cohorts.embed_dim}-dim vectors"
            )
        self.model.eval()

    def scores(
        self,
        feat: FeatureMatrix,
        combine_weight: float = 0.5,
        cohort_norm: str = "minmax",
        softmax_only: bool = False,
    ) -> np.ndarray:
        emb = forward_embed(self.model, feat)
        logits = self.model.head.forward(emb[None, :], None)[0]
        probs = softmax(logits.astype(np.float64))
        if softmax_only:
            return probs
        normed = normalize_scores(cohort_scores(emb, self.cohorts), cohort_norm)
        return combine(probs, normed, combine_weight)


def classify(
    feats: Sequence[FeatureMatrix],
    systems: Sequence[System],
    weights: Sequence[float] | None = None,
    combine_weight: float = 0.5,
    cohort_norm: str = "minmax",
    softmax_only: bool = False,
) -> tuple[int, np.ndarray]:
    """Fuse per-system scores for one utterance; returns (class index, scores)."""
    if not systems:
        raise ConfigurationError("classify needs at least one system")
    if len(feats) != len(systems):
        raise ConfigurationError(
            f"{len(systems)} systems but {len(feats)} feature inputs"
        )
    k = systems[0].model.cfg.n_classes
    if any(s.model.cfg.n_classes != k for s in systems):
        raise ConfigurationError("all systems must share one class set")
    per_system = [
        s.scores(f, combine_weight=combine_weight, cohort_norm=cohort_norm, softmax_only=softmax_only)
        for s, f in zip(systems, feats)
    ]
    fused = fuse(per_system, weights)
    return int(np.argmax(fused)), fused
