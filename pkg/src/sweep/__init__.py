"""Hyperparameter sweep harness."""

from .harness import (
    SweepRecord,
    SweepResult,
    SweepSpec,
    batch_sweep,
    compare_epoch_traces,
    emit_csv,
    epoch_sweep,
    lr_sweep,
    read_csv,
    write_epoch_csv,
)

__all__ = [
    'SweepRecord',
    'SweepResult',
    'SweepSpec',
    'batch_sweep',
    'compare_epoch_traces',
    'emit_csv',
    'epoch_sweep',
    'lr_sweep',
    'read_csv',
    'write_epoch_csv',
]
