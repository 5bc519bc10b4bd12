"""Online go/no-go quality monitor."""

from .remedy import Remedy, suggest_remedy
from .session import (
    GO,
    NO_GO,
    MonitorConfig,
    MonitorSession,
    QualitySignal,
    decide,
    format_signal_line,
    pick_grade,
)
from .stream import EXIT_GO, EXIT_NO_GO, frame_paths, run_stream

__all__ = [
    'Remedy',
    'suggest_remedy',
    'GO',
    'NO_GO',
    'MonitorConfig',
    'MonitorSession',
    'QualitySignal',
    'decide',
    'format_signal_line',
    'pick_grade',
    'EXIT_GO',
    'EXIT_NO_GO',
    'frame_paths',
    'run_stream',
]
