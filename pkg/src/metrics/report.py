"""
Per-class classification metrics and macro reports.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from utils import DomainError, atomic_path, setup_logger
from .confusion import ClassCounts, ConfusionMatrix, class_counts

logger = setup_logger(__name__)

METRIC_NAMES = ('precision', 'sensitivity', 'specificity', 'f_score', 'accuracy')
REPORT_COLUMNS = ['class', *METRIC_NAMES]
MACRO_ROW = 'macro'


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


@dataclass(frozen=True)
class ClassMetrics:
    """
    The five one-vs-rest metrics of one class.

    A metric whose denominator is zero is reported as 0.0 and its name is
    listed in ``undefined``.
    """

    precision: float
    sensitivity: float
    specificity: float
    f_score: float
    accuracy: float
    undefined: frozenset = frozenset()
    support: int = 0

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def class_metrics(counts: ClassCounts) -> ClassMetrics:
    """
    precision   = TP / (TP + FP)
    sensitivity = TP / (TP + FN)
    specificity = TN / (FP + TN)
    f_score     = 2TP / (2TP + FP + FN)
    accuracy    = (TP + TN) / total

    Raises:
        DomainError: no samples at all
    """
    if min(counts.tp, counts.fp, counts.fn, counts.tn) < 0:
        raise DomainError(f"Negative count in {counts}")
    if counts.total == 0:
        raise DomainError("Metrics of zero samples are undefined")
    raw = {
        'precision': _ratio(counts.tp, counts.tp + counts.fp),
        'sensitivity': _ratio(counts.tp, counts.tp + counts.fn),
        'specificity': _ratio(counts.tn, counts.fp + counts.tn),
        'f_score': _ratio(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn),
        'accuracy': _ratio(counts.tp + counts.tn, counts.total),
    }
    undefined = frozenset(name for name, value in raw.items() if value is None)
    return ClassMetrics(**{name: value or 0.0 for name, value in raw.items()},
                        undefined=undefined, support=counts.tp + counts.fn)


@dataclass
class MetricsReport:
    class_names: List[str]
    per_class: List[ClassMetrics]
    macro: Dict[str, float]
    total_accuracy: Optional[float] = None
    weighted: bool = False
    flags: List[str] = field(default_factory=list)

    @classmethod
    def from_class_metrics(cls, per_class: Sequence[ClassMetrics], class_names: Optional[List[str]] = None,
                           total_accuracy: Optional[float] = None, weighted: bool = False) -> 'MetricsReport':
        """
        Average per-class metrics; unweighted by default, support-weighted
        when ``weighted`` is set.
        """
        if not per_class:
            raise DomainError("A report needs at least one class")
        names = class_names or [str(i) for i in range(len(per_class))]
        if weighted:
            support = np.array([m.support for m in per_class], dtype=float)
            if support.sum() == 0:
                raise DomainError("Weighted averaging needs at least one supported class")
            weights = support / support.sum()
        else:
            weights = np.full(len(per_class), 1.0 / len(per_class))
        macro = {name: float(sum(w * getattr(m, name) for w, m in zip(weights, per_class)))
                 for name in METRIC_NAMES}
        flags = [f"{names[i]}: {metric} undefined (zero denominator)"
                 for i, m in enumerate(per_class) for metric in sorted(m.undefined)]
        return cls(list(names), list(per_class), macro, total_accuracy, weighted, flags)

    def to_frame(self) -> pd.DataFrame:
        rows = [[name, *m.as_dict().values()] for name, m in zip(self.class_names, self.per_class)]
        rows.append([MACRO_ROW, *(self.macro[name] for name in METRIC_NAMES)])
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def macro_report(cm: ConfusionMatrix, weighted: bool = False) -> MetricsReport:
    """Per-class metrics of every class, their averages and the total accuracy."""
    if cm.total == 0:
        raise DomainError("Cannot report on an empty confusion matrix")
    per_class = [class_metrics(class_counts(cm, c)) for c in range(cm.n_classes)]
    report = MetricsReport.from_class_metrics(per_class, list(cm.class_names),
                                              total_accuracy=cm.total_accuracy(), weighted=weighted)
    for flag in report.flags:
        logger.warning(flag)
    return report


def write_report_csv(report: MetricsReport, path: Path) -> Path:
    with atomic_path(path) as tmp:
        report.to_frame().to_csv(tmp, index=False, lineterminator='\n', float_format='%.6f')
    return Path(path)


def read_report_csv(path: Path) -> MetricsReport:
    """Read per-class rows and the macro row back; undefined flags are not stored."""
    frame = pd.read_csv(path, dtype={'class': str})
    if list(frame.columns) != REPORT_COLUMNS or frame.empty or frame['class'].iloc[-1] != MACRO_ROW:
        raise DomainError(f"{path} is not a metrics report")
    body = frame.iloc[:-1]
    per_class = [ClassMetrics(**{name: float(getattr(row, name)) for name in METRIC_NAMES})
                 for row in body.itertuples(index=False)]
    macro = {name: float(frame[name].iloc[-1]) for name in METRIC_NAMES}
    return MetricsReport(list(body['class']), per_class, macro)
