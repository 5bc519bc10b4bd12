"""
Confusion matrices: construction, one-vs-rest counts, class collapsing
and CSV export.

Rows are true classes, columns are predicted classes.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from utils import DomainError, atomic_path


@dataclass(frozen=True)
class ClassCounts:
    """One-vs-rest counts for a single class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    class_names: Optional[List[str]] = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1] or self.counts.shape[0] < 1:
            raise DomainError(f"Confusion matrix must be square and nonempty, got shape {self.counts.shape}")
        if (self.counts < 0).any():
            raise DomainError("Confusion matrix counts must be nonnegative")
        if self.class_names is None:
            self.class_names = [str(i) for i in range(self.n_classes)]
        elif len(self.class_names) != self.n_classes:
            raise DomainError(f"{len(self.class_names)} class names for {self.n_classes} classes")

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    def total_accuracy(self) -> float:
        if self.total == 0:
            raise DomainError("Accuracy of an empty confusion matrix is undefined")
        return self.correct / self.total

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.counts, index=pd.Index(self.class_names, name='true'),
                            columns=list(self.class_names))


def confusion_matrix(true_labels: Sequence[int], predicted_labels: Sequence[int], n_classes: int,
                     class_names: Optional[List[str]] = None) -> ConfusionMatrix:
    """
    Count (true, predicted) label pairs.

    Raises:
        DomainError: lengths differ or a label is outside [0, n_classes)
    """
    t = np.asarray(true_labels, dtype=np.int64).reshape(-1)
    p = np.asarray(predicted_labels, dtype=np.int64).reshape(-1)
    if t.shape != p.shape:
        raise DomainError(f"{len(t)} true labels but {len(p)} predictions")
    if n_classes < 1:
        raise DomainError(f"n_classes must be positive, got {n_classes}")
    for name, labels in (('true', t), ('predicted', p)):
        if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
            raise DomainError(f"A {name} label lies outside [0, {n_classes})")
    counts = np.bincount(t * n_classes + p, minlength=n_classes * n_classes).reshape(n_classes, n_classes)
    return ConfusionMatrix(counts, class_names)


def class_counts(cm: ConfusionMatrix, c: int) -> ClassCounts:
    """TP/FP/FN/TN for class ``c`` against all other classes."""
    if not 0 <= c < cm.n_classes:
        raise DomainError(f"Class {c} outside [0, {cm.n_classes})")
    tp = int(cm.counts[c, c])
    fp = int(cm.counts[:, c].sum()) - tp
    fn = int(cm.counts[c, :].sum()) - tp
    return ClassCounts(tp=tp, fp=fp, fn=fn, tn=cm.total - tp - fp - fn)


def collapse_classes(cm: ConfusionMatrix, mapping: Sequence[int],
                     class_names: Optional[List[str]] = None) -> ConfusionMatrix:
    """
    Merge fine classes into coarse ones.

    ``mapping[s]`` is the coarse class of fine class ``s``; the coarse
    matrix sums the fine blocks, so merged[g][h] adds every cm[s][t] with
    s mapped to g and t mapped to h.

    Raises:
        DomainError: the mapping does not cover every fine class
    """
    mapping = np.asarray(mapping, dtype=np.int64)
    if mapping.shape != (cm.n_classes,):
        raise DomainError(f"Mapping covers {mapping.size} classes, matrix has {cm.n_classes}")
    if (mapping < 0).any():
        raise DomainError("Mapping sends a class to a negative index")
    n_coarse = len(class_names) if class_names is not None else int(mapping.max()) + 1
    if mapping.max() >= n_coarse:
        raise DomainError(f"Mapping targets class {int(mapping.max())} but only {n_coarse} names given")
    onehot = np.zeros((cm.n_classes, n_coarse), dtype=np.int64)
    onehot[np.arange(cm.n_classes), mapping] = 1
    return ConfusionMatrix(onehot.T @ cm.counts @ onehot, class_names)


def write_confusion_csv(cm: ConfusionMatrix, path: Path) -> Path:
    """Grid CSV with class names along the header row and first column."""
    with atomic_path(path) as tmp:
        cm.to_frame().to_csv(tmp, lineterminator='\n')
    return Path(path)


def read_confusion_csv(path: Path) -> ConfusionMatrix:
    frame = pd.read_csv(path, index_col=0, dtype={'true': str})
    names = [str(c) for c in frame.columns]
    if [str(i) for i in frame.index] != names:
        raise DomainError(f"Row and column classes differ in {path}")
    return ConfusionMatrix(frame.to_numpy(dtype=np.int64), names)
