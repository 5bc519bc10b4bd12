"""
Accuracy maps over the speed x temperature grid.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from imagegen.process import GRADE_NAMES, GRID_SPEEDS, GRID_TEMPERATURES, QualityGrade, valid_set_points
from utils import DomainError

GRID_SHAPE = (len(GRID_SPEEDS), len(GRID_TEMPERATURES))
NO_DATA = ''


def _failure_mask() -> np.ndarray:
    mask = np.ones(GRID_SHAPE, dtype=bool)
    for sp in valid_set_points():
        mask[sp.speed_index, sp.temp_index] = False
    return mask


def _high_accuracy_region() -> np.ndarray:
    # slow speeds at every temperature, and the hottest column at every speed
    mask = np.zeros(GRID_SHAPE, dtype=bool)
    mask[[GRID_SPEEDS.index(50.0), GRID_SPEEDS.index(100.0)], :] = True
    mask[:, GRID_TEMPERATURES.index(260.0)] = True
    return mask & ~_failure_mask()


DEFAULT_HIGH_ACCURACY_REGION = _high_accuracy_region()


@dataclass
class GridRegionReport:
    inside_mean: float
    outside_mean: float
    cells: pd.DataFrame


def _cell_groups(setpoint_classes: Sequence[int]) -> dict:
    classes = np.asarray(setpoint_classes, dtype=np.int64)
    cells = valid_set_points()
    if classes.size and (classes.min() < 0 or classes.max() >= len(cells)):
        raise DomainError(f"Set point classes must lie in [0, {len(cells)})")
    return {i: np.flatnonzero(classes == i) for i in range(len(cells))}


def cell_accuracies(setpoint_classes: Sequence[int], correct: Sequence[bool]) -> np.ndarray:
    """
    Fraction of correct predictions per grid cell.

    Returns a speeds x temperatures array; failure cells and cells without
    samples are NaN.
    """
    correct = np.asarray(correct, dtype=bool)
    if correct.shape != (len(setpoint_classes),):
        raise DomainError(f"{len(correct)} outcomes for {len(setpoint_classes)} samples")
    grid = np.full(GRID_SHAPE, np.nan)
    cells = valid_set_points()
    for i, idx in _cell_groups(setpoint_classes).items():
        if idx.size:
            grid[cells[i].speed_index, cells[i].temp_index] = correct[idx].mean()
    return grid


def predicted_grade_grid(setpoint_classes: Sequence[int], predicted_grades: Sequence[int]) -> pd.DataFrame:
    """
    Majority predicted grade per cell (ties to the better grade), rows by
    speed and columns by temperature. Failure cells read 'Failure', cells
    without samples are empty.
    """
    predicted = np.asarray(predicted_grades, dtype=np.int64)
    if predicted.shape != (len(setpoint_classes),):
        raise DomainError(f"{len(predicted)} predictions for {len(setpoint_classes)} samples")
    table = np.full(GRID_SHAPE, NO_DATA, dtype=object)
    table[_failure_mask()] = QualityGrade.FAILURE.value
    cells = valid_set_points()
    for i, idx in _cell_groups(setpoint_classes).items():
        if idx.size:
            votes = np.bincount(predicted[idx], minlength=len(GRADE_NAMES))
            table[cells[i].speed_index, cells[i].temp_index] = GRADE_NAMES[int(votes.argmax())]
    return pd.DataFrame(table, index=pd.Index([int(s) for s in GRID_SPEEDS], name='speed_mms'),
                        columns=[int(t) for t in GRID_TEMPERATURES])


def grid_region_report(per_cell: np.ndarray, region: np.ndarray = DEFAULT_HIGH_ACCURACY_REGION) -> GridRegionReport:
    """
    Unweighted mean cell accuracy inside and outside a region of the grid.

    Failure cells and cells without data (NaN) are left out of both means.

    Raises:
        DomainError: shapes are wrong, the region covers a failure cell, or
            either side of the region has no cell with data
    """
    per_cell = np.asarray(per_cell, dtype=float)
    region = np.asarray(region, dtype=bool)
    if per_cell.shape != GRID_SHAPE or region.shape != GRID_SHAPE:
        raise DomainError(f"Grid arrays must have shape {GRID_SHAPE}")
    failure = _failure_mask()
    if (region & failure).any():
        raise DomainError("Region includes a failure cell")
    valid = ~failure & ~np.isnan(per_cell)
    inside = per_cell[region & valid]
    outside = per_cell[~region & valid]
    if inside.size == 0:
        raise DomainError("No cell with data inside the region")
    if outside.size == 0:
        raise DomainError("No cell with data outside the region")

    rows = []
    for i, speed in enumerate(GRID_SPEEDS):
        for j, temperature in enumerate(GRID_TEMPERATURES):
            if failure[i, j]:
                continue
            rows.append({'speed_mms': int(speed), 'temp_c': int(temperature),
                         'accuracy': per_cell[i, j], 'in_region': bool(region[i, j])})
    return GridRegionReport(float(inside.mean()), float(outside.mean()), pd.DataFrame(rows))
