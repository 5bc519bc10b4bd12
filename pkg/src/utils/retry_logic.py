"""
Retry logic utilities with exponential backoff.
"""

import logging
from typing import Optional, Tuple, Type

from tenacity import (
    retry,
    stop_after_attempt,
    wait_exponential,
    retry_if_exception_type,
    before_sleep_log,
    after_log
)

from .config import Config

logger = logging.getLogger(__name__)


def retry_on_exception(
    exceptions: Tuple[Type[Exception], ...] = (Exception,),
    max_attempts: Optional[int] = None,
    min_wait: Optional[float] = None,
    max_wait: Optional[float] = None
):
    """
    Decorator for retrying function calls with exponential backoff.

    The last exception is re-raised once attempts run out.

    Args:
        exceptions: Tuple of exception types to retry on
        max_attempts: Maximum number of attempts (default: Config.FRAME_READ_RETRIES)
        min_wait: Minimum wait time in seconds (default: Config.RETRY_MIN_WAIT)
        max_wait: Maximum wait time in seconds (default: Config.RETRY_MAX_WAIT)

    Example:
        @retry_on_exception(exceptions=(OSError,))
        def load_frame(path):
            return read_pgm(path)
    """
    if max_attempts is None:
        max_attempts = Config.FRAME_READ_RETRIES
    if min_wait is None:
        min_wait = Config.RETRY_MIN_WAIT
    if max_wait is None:
        max_wait = Config.RETRY_MAX_WAIT

    return retry(
        stop=stop_after_attempt(max_attempts),
        wait=wait_exponential(
            multiplier=Config.RETRY_BACKOFF_MULTIPLIER,
            min=min_wait,
            max=max_wait
        ),
        retry=retry_if_exception_type(exceptions),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        after=after_log(logger, logging.DEBUG),
        reraise=True
    )
