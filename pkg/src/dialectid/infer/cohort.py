"""Per-class cohort embeddings and their on-disk store.

A cohort is a random sample of training utterances per class, embedded in
eval mode from whole utterances and unit-normalized. At test time the mean
cosine similarity against each class cohort becomes that class's score.

Store layout, little-endian:

    bytes 0..3   magic b"ADCO"
    byte  4      format version (currently 1)
    bytes 5..7   reserved, zero
    bytes 8..11  u32 class count K
    bytes 12..15 u32 embedding dimension
    ...          K u32 per-class counts
    ...          embeddings as float32, class 0 rows first
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    BadMagicError,
    ConfigurationError,
    FileFormatError,
    NormalizationError,
    TruncatedFileError,
    VersionError,
)
from ..models import Model, forward_embed
from ..train.manifest import Manifest

COHORT_MAGIC = b"ADCO"
COHORT_VERSION = 1
_PREFIX = struct.Struct("<4sB3xII")

UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class CohortSet:
    embeddings: tuple  # one (n_k, embed_dim) float32 array per class

    def __post_init__(self):
        embs = tuple(np.asarray(e, dtype=np.float32) for e in self.embeddings)
        if not embs:
            raise ConfigurationError("cohort set must cover at least one class")
        dim = embs[0].shape[1] if embs[0].ndim == 2 else -1
        for k, e in enumerate(embs):
            if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] != dim:
                raise ConfigurationError(
                    f"class {k}: expected a non-empty (n, {dim}) embedding block, "
                    f"got shape {e.shape}"
                )
            norms = np.linalg.norm(e, axis=1)
            if np.abs(norms - 1.0).max() > UNIT_NORM_TOL:
                raise ConfigurationError(
                    f"class {k}: cohort embeddings must be unit-norm within "
                    f"{UNIT_NORM_TOL}"
                )
        object.__setattr__(self, "embeddings", embs)

    @property
    def n_classes(self) -> int:
        return len(self.embeddings)

    @property
    def embed_dim(self) -> int:
        return self.embeddings[0].shape[1]

    def counts(self) -> tuple:
        return tuple(e.shape[0] for e in self.embeddings)


def unit_normalize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float32)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise NormalizationError("cannot unit-normalize a zero vector")
    out = vec / norm
    # float32 division can land a hair outside the tolerance; renormalize once
    return out / np.float32(np.linalg.norm(out))


def build_cohorts(
    model: Model,
    manifest: Manifest,
    features,
    n_per_class: int = 500,
    rng=None,
    embed_cache: dict | None = None,
) -> CohortSet:
    """Sample up to n_per_class utterances per class and embed them.

    Sampling is without replacement, clamped to class size. `features` maps
    utterance id to FeatureMatrix (mapping or callable). `embed_cache`, when
    given, memoizes embeddings across calls keyed by utterance id, which
    keeps repeated cohort draws over the same trained model cheap.
    """
    if n_per_class < 1:
        raise ConfigurationError(f"n_per_class must be >= 1, got {n_per_class}")
    if manifest.n_classes < 1:
        raise ConfigurationError("manifest has no classes")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    source = features.__getitem__ if hasattr(features, "__getitem__") else features

    by_class = manifest.by_class()
    for idx in range(manifest.n_classes):
        if not by_class[idx]:
            raise ConfigurationError(f"class {manifest.labels[idx]!r} has no utterances")

    was_training = model.training
    model.eval()
    try:
        blocks = []
        for idx in range(manifest.n_classes):
            members = by_class[idx]
            n_take = min(n_per_class, len(members))
            chosen = rng.choice(len(members), size=n_take, replace=False)
            rows = []
            for j in sorted(int(c) for c in chosen):
                utt = members[j]
                if embed_cache is not None and utt.utt_id in embed_cache:
                    emb = embed_cache[utt.utt_id]
                else:
                    emb = unit_normalize(forward_embed(model, source(utt.utt_id)))
                    if embed_cache is not None:
                        embed_cache[utt.utt_id] = emb
                rows.append(emb)
            blocks.append(np.stack(rows))
    finally:
        if was_training:
            model.train()
    return CohortSet(embeddings=tuple(blocks))


def save_cohorts(path, cohorts: CohortSet) -> None:
    counts = cohorts.counts()
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(COHORT_MAGIC, COHORT_VERSION, cohorts.n_classes, cohorts.embed_dim))
        fh.write(struct.pack(f"<{len(counts)}I", *counts))
        for block in cohorts.embeddings:
            fh.write(np.ascontiguousarray(block, dtype="<f4").tobytes())


def load_cohorts(path) -> CohortSet:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise TruncatedFileError(f"{path}: file shorter than the fixed prefix")
    magic, version, k, dim = _PREFIX.unpack_from(data)
    if magic != COHORT_MAGIC:
        raise BadMagicError(f"{path}: expected magic {COHORT_MAGIC!r}, got {magic!r}")
    if version != COHORT_VERSION:
        raise VersionError(f"{path}: unsupported cohort store version {version}")
    if k < 1 or dim < 1:
        raise FileFormatError(f"{path}: bad class count {k} or embed dim {dim}")
    counts_end = _PREFIX.size + 4 * k
    if len(data) < counts_end:
        raise TruncatedFileError(f"{path}: count table extends past end of file")
    counts = struct.unpack_from(f"<{k}I", data, _PREFIX.size)
    offset = counts_end
    blocks = []
    for n in counts:
        n_bytes = 4 * n * dim
        if offset + n_bytes > len(data):
            raise TruncatedFileError(f"{path}: embedding block extends past end of file")
        block = np.frombuffer(data, dtype="<f4", count=n * dim, offset=offset)
        blocks.append(block.reshape(n, dim).copy())
        offset += n_bytes
    if offset != len(data):
        raise FileFormatError(f"{path}: {len(data) - offset} trailing bytes after payload")
    try:
        return CohortSet(embeddings=tuple(blocks))
    except ConfigurationError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
