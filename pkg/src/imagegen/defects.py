"""
Defect content of a deposited layer as a function of the set point.

Voids come from underfill (fast, cold extrusion); overfill blobs from
residual melt pressure at slow, hot settings. Bead-width jitter grows with
the overall badness.
"""

import math
from dataclasses import dataclass

import numpy as np

from utils import make_rng
from .process import ProcessState, badness, speed_temperature_terms

MAX_VOIDS = 12
MAX_OVERFILL = 6
BASE_JITTER = 0.05

# Spawn keys inside a layer seed
DEFECT_STREAM = 0
RASTER_STREAM = 1


@dataclass(frozen=True)
class DefectField:
    void_count: int
    overfill_count: int
    bead_jitter: float
    badness: float
    expected_voids: int
    expected_overfill: int


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def expected_counts(state: ProcessState, max_voids: int = MAX_VOIDS,
                    max_overfill: int = MAX_OVERFILL) -> tuple:
    """Expected (void_count, overfill_count) for a set point."""
    u, v = speed_temperature_terms(state)
    voids = round(max_voids * _clamp01(0.8 * u + 0.4 * (1.0 - v)))
    overfill = round(max_overfill * v * (1.0 - u))
    return int(voids), int(overfill)


def poisson_by_inversion(rng: np.random.Generator, lam: float, cap: int = 1000) -> int:
    """Poisson draw by CDF inversion of a single uniform from ``rng``."""
    u = rng.random()
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u > cdf and k < cap:
        k += 1
        p *= lam / k
        cdf += p
    return k


def defect_field(state: ProcessState, seed: int,
                 max_voids: int = MAX_VOIDS, max_overfill: int = MAX_OVERFILL) -> DefectField:
    """Deterministic defect counts for (state, seed)."""
    b = badness(state)
    voids, overfill = expected_counts(state, max_voids, max_overfill)
    rng = make_rng(seed, DEFECT_STREAM)
    return DefectField(
        void_count=poisson_by_inversion(rng, voids),
        overfill_count=poisson_by_inversion(rng, overfill),
        bead_jitter=BASE_JITTER * (1.0 + 2.0 * b),
        badness=b,
        expected_voids=voids,
        expected_overfill=overfill,
    )
