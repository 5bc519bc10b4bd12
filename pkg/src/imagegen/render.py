"""
Synthetic top-view rendering of one deposited layer.

Images are 2-D float64 arrays (height x width) with intensities in [0, 1].
"""

import math

import numpy as np
from PIL import Image as PILImage, ImageDraw

from utils import DomainError, FailedSetPointError, make_rng
from .defects import RASTER_STREAM, defect_field, MAX_VOIDS, MAX_OVERFILL
from .process import ProcessState, QualityGrade, true_grade

BACKGROUND = 0.10
BEAD = 0.60
VOID = 0.05
OVERFILL = 0.95
NOISE_SIGMA = 0.02

REFERENCE_SIZE = 64
BEAD_PITCH = 6  # px at the reference size
BEAD_FILL = 0.8  # nominal bead width as a fraction of the pitch


def _mask(size: tuple) -> tuple:
    canvas = PILImage.new('L', size, 0)
    return canvas, ImageDraw.Draw(canvas)


def _bead_mask(width: int, height: int, layer_index: int, jitter: float,
               rng: np.random.Generator) -> np.ndarray:
    # Beads run along x on even layers; odd layers are drawn the same way
    # on the transposed canvas, turning the raster by 90 degrees.
    vertical = layer_index % 2 == 1
    span, across = (height, width) if vertical else (width, height)
    pitch = BEAD_PITCH * across / REFERENCE_SIZE
    canvas, draw = _mask((span, across))
    n_beads = int(math.ceil(across / pitch))
    z = rng.standard_normal(n_beads)
    for i in range(n_beads):
        centre = (i + 0.5) * pitch
        w = pitch * BEAD_FILL * (1.0 + jitter * z[i])
        w = min(max(w, 0.35 * pitch), pitch)
        top = int(round(centre - w / 2))
        bottom = int(round(centre + w / 2)) - 1
        if bottom >= top:
            draw.rectangle([0, top, span - 1, bottom], fill=255)
    mask = np.asarray(canvas) > 0
    return mask.T if vertical else mask


def _blob_mask(width: int, height: int, count: int, radius: tuple,
               rng: np.random.Generator) -> np.ndarray:
    canvas, draw = _mask((width, height))
    scale = min(width, height) / REFERENCE_SIZE
    for _ in range(count):
        cx = rng.uniform(0, width)
        cy = rng.uniform(0, height)
        a = rng.uniform(*radius) * scale
        b = rng.uniform(*radius) * scale
        draw.ellipse([cx - a, cy - b, cx + a, cy + b], fill=255)
    return np.asarray(canvas) > 0


def render_layer(state: ProcessState, layer_index: int, seed: int,
                 width: int = REFERENCE_SIZE, height: int = REFERENCE_SIZE,
                 noise_sigma: float = NOISE_SIGMA,
                 max_voids: int = MAX_VOIDS, max_overfill: int = MAX_OVERFILL) -> np.ndarray:
    """
    Render one layer image for a set point.

    Args:
        state: extruder set point; failure set points are refused
        layer_index: layer number, its parity picks the raster direction
        seed: 64-bit layer seed; output is a pure function of the inputs
        width, height: image size in pixels
        noise_sigma: std-dev of the additive pixel noise (0 disables it)

    Returns:
        (height, width) float64 array in [0, 1]
    """
    if layer_index < 0:
        raise DomainError(f"layer_index must be >= 0, got {layer_index}")
    if width < 8 or height < 8:
        raise DomainError(f"Image size {width}x{height} is too small to render beads")
    if true_grade(state) is QualityGrade.FAILURE:
        raise FailedSetPointError(
            f"({state.speed:g} mm/s, {state.temperature:g} C) fails to print; no layer to render"
        )

    field = defect_field(state, seed, max_voids, max_overfill)
    rng = make_rng(seed, RASTER_STREAM)

    image = np.full((height, width), BACKGROUND, dtype=np.float64)
    image[_bead_mask(width, height, layer_index, field.bead_jitter, rng)] = BEAD
    image[_blob_mask(width, height, field.overfill_count, (1.5, 3.5), rng)] = OVERFILL
    image[_blob_mask(width, height, field.void_count, (1.5, 4.0), rng)] = VOID

    if noise_sigma > 0:
        image += rng.normal(0.0, noise_sigma, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def normalize_intensity(image: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant image maps to 0.5 everywhere."""
    image = np.asarray(image, dtype=np.float64)
    if image.size == 0:
        raise DomainError("Cannot normalize an empty image")
    lo = float(image.min())
    hi = float(image.max())
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("Image contains non-finite intensities")
    if hi == lo:
        return np.full(image.shape, 0.5)
    return (image - lo) / (hi - lo)
