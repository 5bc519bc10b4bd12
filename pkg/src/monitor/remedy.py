"""
Set-point adjustments suggested when print quality drops.
"""

from dataclasses import dataclass
from typing import Optional, Union

from imagegen.process import (
    GRID_SPEEDS, GRID_TEMPERATURES, ProcessState, QualityGrade, SetPointClass, badness
)
from utils import DomainError

ACCEPTABLE_GRADES = (QualityGrade.A, QualityGrade.B)


@dataclass(frozen=True)
class Remedy:
    """A one-step grid move: slower by one speed index or hotter by one temperature index."""

    speed_steps: int
    temp_steps: int
    current: SetPointClass
    suggested: SetPointClass
    rationale: str

    def __str__(self) -> str:
        return self.rationale


def _candidates(cell: SetPointClass):
    if cell.speed_index > 0:
        yield -1, 0, SetPointClass(cell.speed_index - 1, cell.temp_index)
    if cell.temp_index < len(GRID_TEMPERATURES) - 1:
        yield 0, 1, SetPointClass(cell.speed_index, cell.temp_index + 1)


def suggest_remedy(set_point: Union[ProcessState, SetPointClass],
                   grade: Union[QualityGrade, str]) -> Optional[Remedy]:
    """
    Suggest the legal one-step move that lowers badness the most.

    No remedy for grades A and B, or when no move off the current cell
    lowers badness. Moves that leave the grid or land on a failure cell
    are never proposed. On equal improvement the speed move wins.

    Raises:
        DomainError: the set point is off the grid or the grade is Failure
    """
    cell = set_point if isinstance(set_point, SetPointClass) else SetPointClass.from_state(set_point)
    if not isinstance(grade, QualityGrade):
        grade = QualityGrade.parse(grade)
    if grade is QualityGrade.FAILURE:
        raise DomainError("No remedy is defined for a failed print")
    if grade in ACCEPTABLE_GRADES:
        return None

    current = badness(cell.state)
    best = None
    for speed_steps, temp_steps, target in _candidates(cell):
        if target.is_failure:
            continue
        gain = current - badness(target.state)
        if gain > 0 and (best is None or gain > best[0]):
            best = (gain, speed_steps, temp_steps, target)
    if best is None:
        return None

    gain, speed_steps, temp_steps, target = best
    if speed_steps:
        move = f"speed {GRID_SPEEDS[cell.speed_index]:g}->{GRID_SPEEDS[target.speed_index]:g}mm/s"
    else:
        move = f"temp {GRID_TEMPERATURES[cell.temp_index]:g}->{GRID_TEMPERATURES[target.temp_index]:g}C"
    rationale = f"{move} (badness {current:.3f}->{current - gain:.3f})"
    return Remedy(speed_steps, temp_steps, cell, target, rationale)
