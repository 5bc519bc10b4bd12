"""Confusion matrices, one-vs-rest metrics and grid accuracy maps."""

from .confusion import (
    ClassCounts,
    ConfusionMatrix,
    class_counts,
    collapse_classes,
    confusion_matrix,
    read_confusion_csv,
    write_confusion_csv,
)
from .report import (
    ClassMetrics,
    MetricsReport,
    class_metrics,
    macro_report,
    read_report_csv,
    write_report_csv,
)
from .grid import (
    DEFAULT_HIGH_ACCURACY_REGION,
    GridRegionReport,
    cell_accuracies,
    grid_region_report,
    predicted_grade_grid,
)

__all__ = [
    'ClassCounts',
    'ConfusionMatrix',
    'class_counts',
    'collapse_classes',
    'confusion_matrix',
    'read_confusion_csv',
    'write_confusion_csv',
    'ClassMetrics',
    'MetricsReport',
    'class_metrics',
    'macro_report',
    'read_report_csv',
    'write_report_csv',
    'DEFAULT_HIGH_ACCURACY_REGION',
    'GridRegionReport',
    'cell_accuracies',
    'grid_region_report',
    'predicted_grade_grid',
]
