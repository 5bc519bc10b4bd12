"""
Exception types shared across the AM quality monitor packages.
"""

from typing import Optional


class AMQError(Exception):
    """Base class for all errors raised by this project."""


class DomainError(AMQError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class ShapeError(DomainError):
    """Tensor shapes do not chain or do not match."""


class FailedSetPointError(DomainError):
    """The set point is a print failure; there is no layer to render."""


class ConfigurationError(AMQError, ValueError):
    """Settings are inconsistent or cannot be satisfied."""


class StaleCacheError(AMQError, RuntimeError):
    """A forward cache does not belong to the parameters or mode given."""


class CheckpointFormatError(AMQError):
    """A checkpoint file is malformed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class FrameReadError(AMQError, OSError):
    """A monitor frame could not be read."""

    def __init__(self, message: str, frame_index: Optional[int] = None):
        prefix = f"frame {frame_index}: " if frame_index is not None else ""
        super().__init__(f"{prefix}{message}")
        self.frame_index = frame_index
