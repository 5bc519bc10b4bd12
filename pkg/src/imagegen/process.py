"""
Process set points, the badness model and the grade label table.

The machine grid is six extruder speeds by four extruder temperatures.
Three slow-melt cells (185 C above 200 mm/s) never produce a part, leaving
21 valid set points.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

from utils import DomainError

GRID_SPEEDS: Tuple[float, ...] = (50.0, 100.0, 200.0, 400.0, 800.0, 1000.0)
GRID_TEMPERATURES: Tuple[float, ...] = (185.0, 200.0, 230.0, 260.0)

SPEED_RANGE = (50.0, 1000.0)
TEMPERATURE_RANGE = (185.0, 260.0)

GRADE_THRESHOLDS = (0.2, 0.4, 0.6, 0.8)
SPEED_WEIGHT = 0.7
TEMPERATURE_WEIGHT = 0.3

# Below this temperature the filament cannot keep up with fast extrusion
FAILURE_MAX_TEMPERATURE = 190.0
FAILURE_MIN_SPEED = 200.0


class QualityGrade(str, Enum):
    """Print quality, A best to E worst. FAILURE marks set points with no part."""

    A = 'A'
    B = 'B'
    C = 'C'
    D = 'D'
    E = 'E'
    FAILURE = 'Failure'

    @property
    def index(self) -> int:
        if self is QualityGrade.FAILURE:
            raise DomainError("Failure is not a classification target")
        return GRADES.index(self)

    @classmethod
    def parse(cls, value: str) -> 'QualityGrade':
        try:
            return cls(value.strip().upper() if len(value.strip()) == 1 else value.strip().capitalize())
        except ValueError:
            raise DomainError(f"Unknown quality grade: {value!r}") from None


# The 5-grade classification target, in order of decreasing quality
GRADES: Tuple[QualityGrade, ...] = (
    QualityGrade.A, QualityGrade.B, QualityGrade.C, QualityGrade.D, QualityGrade.E
)
GRADE_NAMES: Tuple[str, ...] = tuple(g.value for g in GRADES)


@dataclass(frozen=True)
class ProcessState:
    """Extruder speed (mm/s) and extruder temperature (C)."""

    speed: float
    temperature: float

    def __post_init__(self):
        for name, value, (lo, hi) in (
            ('speed', self.speed, SPEED_RANGE),
            ('temperature', self.temperature, TEMPERATURE_RANGE),
        ):
            if not math.isfinite(value) or not lo <= value <= hi:
                raise DomainError(f"{name}={value} outside [{lo:g}, {hi:g}]")


@dataclass(frozen=True, order=True)
class SetPointClass:
    """A cell of the speed x temperature grid."""

    speed_index: int
    temp_index: int

    def __post_init__(self):
        if not (0 <= self.speed_index < len(GRID_SPEEDS) and 0 <= self.temp_index < len(GRID_TEMPERATURES)):
            raise DomainError(f"Set point ({self.speed_index}, {self.temp_index}) is off the grid")

    @property
    def state(self) -> ProcessState:
        return ProcessState(GRID_SPEEDS[self.speed_index], GRID_TEMPERATURES[self.temp_index])

    @property
    def is_failure(self) -> bool:
        return is_failure(self.state)

    @property
    def label(self) -> str:
        return f"{GRID_SPEEDS[self.speed_index]:g}mm/s@{GRID_TEMPERATURES[self.temp_index]:g}C"

    @classmethod
    def from_state(cls, state: ProcessState) -> 'SetPointClass':
        """Grid cell of an on-grid state; off-grid states raise DomainError."""
        try:
            return cls(GRID_SPEEDS.index(float(state.speed)), GRID_TEMPERATURES.index(float(state.temperature)))
        except ValueError:
            raise DomainError(f"({state.speed:g} mm/s, {state.temperature:g} C) is not a grid set point") from None


def _speed_term(speed: float) -> float:
    return math.log(speed / SPEED_RANGE[0]) / math.log(SPEED_RANGE[1] / SPEED_RANGE[0])


def _temperature_term(temperature: float) -> float:
    return (temperature - TEMPERATURE_RANGE[0]) / (TEMPERATURE_RANGE[1] - TEMPERATURE_RANGE[0])


def speed_temperature_terms(state: ProcessState) -> Tuple[float, float]:
    """Normalized (u, v): log-scaled speed and linear temperature, both in [0, 1]."""
    return _speed_term(state.speed), _temperature_term(state.temperature)


def badness(state: ProcessState) -> float:
    """
    Defect propensity of a set point in [0, 1].

    Nondecreasing in speed, nonincreasing in temperature.
    """
    u, v = speed_temperature_terms(state)
    b = SPEED_WEIGHT * u + TEMPERATURE_WEIGHT * (1.0 - v)
    return min(max(b, 0.0), 1.0)


def is_failure(state: ProcessState) -> bool:
    return state.temperature < FAILURE_MAX_TEMPERATURE and state.speed > FAILURE_MIN_SPEED


def grade_for_badness(b: float) -> QualityGrade:
    for threshold, grade in zip(GRADE_THRESHOLDS, GRADES):
        if b < threshold:
            return grade
    return QualityGrade.E


def true_grade(state: ProcessState) -> QualityGrade:
    """Grade a set point produces; FAILURE where no part is printed."""
    if is_failure(state):
        return QualityGrade.FAILURE
    return grade_for_badness(badness(state))


def all_set_points() -> List[SetPointClass]:
    return [SetPointClass(i, j) for i in range(len(GRID_SPEEDS)) for j in range(len(GRID_TEMPERATURES))]


def valid_set_points() -> List[SetPointClass]:
    """The 21 non-failure cells, sorted by (speed_index, temp_index)."""
    return [sp for sp in all_set_points() if not sp.is_failure]


def set_point_index(set_point: SetPointClass) -> int:
    """Class index (0..20) of a valid set point."""
    try:
        return valid_set_points().index(set_point)
    except ValueError:
        raise DomainError(f"{set_point.label} is a failure cell and has no class index") from None


def parse_cell_key(key: str) -> SetPointClass:
    """Parse an override key of the form 'speed,temperature' (grid values)."""
    try:
        speed, temperature = (float(part) for part in key.split(','))
    except ValueError:
        raise DomainError(f"Bad set point key {key!r}; expected 'speed,temperature'") from None
    return SetPointClass.from_state(ProcessState(speed, temperature))


def grade_table(overrides: Optional[Mapping[str, str]] = None) -> Dict[SetPointClass, QualityGrade]:
    """
    Grade of every grid cell, FAILURE cells included.

    Args:
        overrides: optional {'speed,temperature': grade} replacements for
            valid cells; failure cells cannot be overridden

    Returns:
        Mapping from every SetPointClass to its grade
    """
    table = {sp: true_grade(sp.state) for sp in all_set_points()}
    for key, value in (overrides or {}).items():
        sp = parse_cell_key(key)
        grade = QualityGrade.parse(value)
        if table[sp] is QualityGrade.FAILURE or grade is QualityGrade.FAILURE:
            raise DomainError(f"Cannot override {sp.label}: failure cells are fixed by the machine")
        table[sp] = grade
    return table


def set_point_to_grade_mapping(overrides: Optional[Mapping[str, str]] = None) -> List[int]:
    """Grade index for each of the 21 set-point classes, in class order."""
    table = grade_table(overrides)
    return [table[sp].index for sp in valid_set_points()]
