"""Utils package for the AM quality monitor."""

from .config import Config
from .logger import setup_logger
from .retry_logic import retry_on_exception
from .errors import (
    AMQError,
    DomainError,
    ShapeError,
    FailedSetPointError,
    ConfigurationError,
    StaleCacheError,
    CheckpointFormatError,
    FrameReadError,
)
from .seeding import derive_seed, make_rng, SPLIT_STREAM
from .atomic import atomic_path, atomic_write_bytes

__all__ = [
    'Config',
    'setup_logger',
    'retry_on_exception',
    'AMQError',
    'DomainError',
    'ShapeError',
    'FailedSetPointError',
    'ConfigurationError',
    'StaleCacheError',
    'CheckpointFormatError',
    'FrameReadError',
    'derive_seed',
    'make_rng',
    'SPLIT_STREAM',
    'atomic_path',
    'atomic_write_bytes',
]
