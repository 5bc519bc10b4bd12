"""
Run a monitor session over a directory of frames or a list of paths.
"""

import sys
from pathlib import Path
from typing import Iterable, List, Optional, TextIO, Union

from imagegen.pgm import read_pgm
from imagegen.render import normalize_intensity
from utils import DomainError, FrameReadError, retry_on_exception, setup_logger
from .session import GO, MonitorConfig, MonitorSession, format_signal_line

logger = setup_logger(__name__)

EXIT_GO = 0
EXIT_NO_GO = 2
FRAME_SUFFIX = '.pgm'

FrameSource = Union[Path, str, Iterable[str]]


def frame_paths(source: FrameSource) -> List[Path]:
    """
    Frames of a directory in lexicographic filename order, or one path
    per nonblank line of an iterable (such as standard input).
    """
    if isinstance(source, (str, Path)):
        directory = Path(source)
        if not directory.is_dir():
            raise FileNotFoundError(f"Frame directory not found: {directory}")
        return sorted((p for p in directory.iterdir() if p.suffix.lower() == FRAME_SUFFIX), key=lambda p: p.name)
    return [Path(line.strip()) for line in source if line.strip()]


def run_stream(config: MonitorConfig, source: FrameSource, log: Optional[TextIO] = None,
               session: Optional[MonitorSession] = None) -> int:
    """
    Push every frame of ``source`` through a session, writing one signal
    line per full window to ``log``.

    Unreadable or mis-sized frames are logged and skipped.

    Returns:
        0 if the final decision is go, 2 if no_go

    Raises:
        ConfigurationError: checkpoint missing or unusable
    """
    session = session or MonitorSession.from_checkpoint(config)
    log = log or sys.stdout
    paths = frame_paths(source)
    read = retry_on_exception((OSError,), max_attempts=config.read_retries)(read_pgm)
    logger.info(f"Monitoring {len(paths)} frames (window={config.window_size}, stop after "
                f"{config.stop_after} of {sorted(g.value for g in config.no_go_grades)})")

    skipped = 0
    for index, path in enumerate(paths):
        try:
            try:
                image = read(path)
            except OSError as e:
                raise FrameReadError(f"cannot read {path}: {e}", index) from e
            signal = session.push_frame(normalize_intensity(image), frame_index=index)
        except (FrameReadError, DomainError) as e:
            skipped += 1
            logger.error(f"Skipping frame {index}: {e}")
            continue
        if signal is not None:
            log.write(format_signal_line(signal) + '\n')
            log.flush()

    logger.info(f"Stream done: {len(session.signals)} signals, {skipped} frames skipped, "
                f"decision {session.decision}")
    return EXIT_GO if session.decision == GO else EXIT_NO_GO
