"""
8-bit binary portable graymap (P5, maxval 255) reading and writing.
"""

import io
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from utils import DomainError, atomic_write_bytes

PathLike = Union[str, Path]


def quantize(image: np.ndarray) -> np.ndarray:
    """Intensities in [0, 1] to uint8 by round(x * 255), halves rounding up."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DomainError(f"Expected a 2-D image, got shape {image.shape}")
    return np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_pgm(image: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    PILImage.fromarray(quantize(image)).save(buffer, format='PPM')
    return buffer.getvalue()


def write_pgm(path: PathLike, image: np.ndarray) -> Path:
    """Write ``image`` as a P5 graymap (atomically)."""
    return atomic_write_bytes(path, encode_pgm(image))


def read_pgm(path: PathLike) -> np.ndarray:
    """
    Read an 8-bit graymap as float64 intensities in [0, 1].

    Raises:
        OSError: unreadable or non-graymap file
    """
    try:
        with PILImage.open(path) as img:
            if img.format != 'PPM' or img.mode != 'L':
                raise OSError(f"{path}: not an 8-bit graymap (format={img.format}, mode={img.mode})")
            data = np.asarray(img, dtype=np.float64)
    except UnidentifiedImageError as e:
        raise OSError(f"{path}: {e}") from e
    return data / 255.0
