"""
Configuration loader for the AM quality monitor.
Loads environment variables and provides access to ambient settings.

Run behavior is driven by CLI flags; the environment only supplies the
default output directory and the logging setup.
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Configuration settings loaded from environment variables."""

    # Output
    AMQ_OUT: str = os.getenv('AMQ_OUT', 'out')

    # Logging Configuration
    LOG_LEVEL: str = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE: str = os.getenv('LOG_FILE', 'logs/amq.log')
    LOG_MAX_BYTES: int = int(os.getenv('LOG_MAX_BYTES', '10485760'))
    LOG_BACKUP_COUNT: int = int(os.getenv('LOG_BACKUP_COUNT', '5'))
    LOG_FORMAT: str = os.getenv('LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    LOG_DATE_FORMAT: str = os.getenv('LOG_DATE_FORMAT', '%Y-%m-%d %H:%M:%S')

    # Frame reads in the monitor (files may still be landing from the camera)
    FRAME_READ_RETRIES: int = 3
    RETRY_BACKOFF_MULTIPLIER: float = 0.1
    RETRY_MIN_WAIT: float = 0.1
    RETRY_MAX_WAIT: float = 1.0

    @classmethod
    def validate(cls) -> bool:
        """
        Validate ambient settings.

        Returns:
            True if configuration is valid, raises ValueError otherwise
        """
        if cls.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ValueError(
                f"Invalid LOG_LEVEL={cls.LOG_LEVEL}. "
                "Use one of DEBUG, INFO, WARNING, ERROR, CRITICAL."
            )
        if cls.LOG_MAX_BYTES <= 0 or cls.LOG_BACKUP_COUNT < 0:
            raise ValueError("LOG_MAX_BYTES must be positive and LOG_BACKUP_COUNT nonnegative.")
        if not cls.AMQ_OUT:
            raise ValueError("AMQ_OUT is set but empty. Unset it or point it at a directory.")
        return True


# Validate configuration on import
Config.validate()
