"""Confusion matrices and the accuracy / macro-precision / macro-recall report.

Rows index the reference label, columns the prediction. Macro averaging
weights every class equally; a class that never appears in predictions (or
references) contributes zero to the corresponding mean rather than a NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError
from .train.manifest import Manifest


def confusion(preds: Sequence[int], refs: Sequence[int], n_classes: int) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.int64)
    refs = np.asarray(refs, dtype=np.int64)
    if preds.shape != refs.shape or preds.ndim != 1:
        raise DimensionError(
            f"predictions and references must be equal-length vectors, "
            f"got {preds.shape} and {refs.shape}"
        )
    if n_classes < 1:
        raise ConfigurationError(f"n_classes must be >= 1, got {n_classes}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for arr, what in ((preds, "prediction"), (refs, "reference")):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ConfigurationError(f"{what} label outside 0..{n_classes - 1}")
    np.add.at(cm, (refs, preds), 1)
    return cm


def metrics(cm: np.ndarray) -> tuple[float, float, float]:
    """(accuracy, macro precision, macro recall), each in [0, 1]."""
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise DimensionError(f"confusion matrix must be square, got {cm.shape}")
    total = int(cm.sum())
    if total == 0:
        raise ConfigurationError("confusion matrix is empty")
    diag = np.diag(cm).astype(np.float64)
    col = cm.sum(axis=0).astype(np.float64)
    row = cm.sum(axis=1).astype(np.float64)
    precision = np.divide(diag, col, out=np.zeros_like(diag), where=col > 0)
    recall = np.divide(diag, row, out=np.zeros_like(diag), where=row > 0)
    return float(diag.sum() / total), float(precision.mean()), float(recall.mean())


def metrics_line(accuracy: float, precision: float, recall: float) -> str:
    """Tab-separated percentages, one decimal each."""
    return f"{100 * accuracy:.1f}\t{100 * precision:.1f}\t{100 * recall:.1f}"


@dataclass(frozen=True)
class Report:
    labels: tuple
    confusion: np.ndarray
    accuracy: float
    precision: float
    recall: float
    scores: tuple  # (utt_id, score vector, decision index) per utterance

    def score_lines(self) -> list[str]:
        out = []
        for utt_id, vec, decision in self.scores:
            cols = "\t".join(f"{v:.6f}" for v in vec)
            out.append(f"{utt_id}\t{cols}\t{self.labels[decision]}")
        return out

    def text(self) -> str:
        width = max(len(l) for l in self.labels) + 2
        lines = ["confusion (rows = reference, columns = prediction):"]
        header = " " * width + "".join(f"{l:>{width}}" for l in self.labels)
        lines.append(header)
        for i, label in enumerate(self.labels):
            row = "".join(f"{int(c):>{width}}" for c in self.confusion[i])
            lines.append(f"{label:<{width}}{row}")
        lines.append("")
        lines.append("accuracy\tprecision\trecall")
        lines.append(metrics_line(self.accuracy, self.precision, self.recall))
        return "\n".join(lines) + "\n"


def evaluate(
    manifest: Manifest,
    classifier: Callable[[str], tuple[int, np.ndarray]],
) -> Report:
    """Score every manifest utterance with `classifier(utt_id) -> (idx, scores)`."""
    if len(manifest) == 0:
        raise ConfigurationError("cannot evaluate an empty manifest")
    preds = []
    refs = []
    scored = []
    for u in manifest:
        decision, vec = classifier(u.utt_id)
        preds.append(decision)
        refs.append(manifest.label_index(u.label))
        scored.append((u.utt_id, np.asarray(vec, dtype=np.float64), int(decision)))
    cm = confusion(preds, refs, manifest.n_classes)
    accuracy, precision, recall = metrics(cm)
    return Report(
        labels=manifest.labels,
        confusion=cm,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        scores=tuple(scored),
    )
