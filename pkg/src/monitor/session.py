"""
Online quality monitoring over a stream of layer frames.

Each frame is classified in eval mode; the class distributions of the last
W frames are averaged into a quality signal. K consecutive signals with a
no-go grade latch the session into no_go until reset.
"""

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Deque, FrozenSet, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from imagegen.process import (
    GRADES, ProcessState, QualityGrade, set_point_to_grade_mapping, valid_set_points
)
from nn.checkpoint import load_checkpoint
from nn.model import ModelConfig, Parameters, predict
from nn.training import evaluate
from utils import Config, ConfigurationError, ShapeError, setup_logger
from .remedy import Remedy, suggest_remedy

logger = setup_logger(__name__)

Decision = Literal['go', 'no_go']
GO: Decision = 'go'
NO_GO: Decision = 'no_go'


class MonitorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    window_size: int = Field(15, ge=1)
    no_go_grades: FrozenSet[QualityGrade] = frozenset({QualityGrade.D, QualityGrade.E})
    stop_after: int = Field(5, ge=1, description="consecutive no-go windows before latching")
    checkpoint: Optional[Path] = None
    # current machine set point (speed, temperature); enables remedies
    set_point: Optional[Tuple[float, float]] = None
    prefer_better_grade: bool = True
    read_retries: int = Field(Config.FRAME_READ_RETRIES, ge=1)

    @field_validator('no_go_grades')
    @classmethod
    def _gradeable(cls, grades: FrozenSet[QualityGrade]) -> FrozenSet[QualityGrade]:
        if QualityGrade.FAILURE in grades:
            raise ValueError("Failure is not a decided grade")
        return grades


@dataclass(frozen=True)
class QualitySignal:
    frame_index: int
    distribution: np.ndarray
    grade: QualityGrade
    confidence: float
    decision: Decision
    remedy: Optional[Remedy] = None


def format_signal_line(signal: QualitySignal) -> str:
    """frame_index, grade, confidence, decision, remedy ('-' if none), tab separated."""
    remedy = str(signal.remedy) if signal.remedy is not None else '-'
    return f"{signal.frame_index}\t{signal.grade.value}\t{signal.confidence:.4f}\t{signal.decision}\t{remedy}"


def decide(grades: Sequence[QualityGrade], stop_after: int = 5,
           no_go_grades: Iterable[QualityGrade] = (QualityGrade.D, QualityGrade.E)) -> Decision:
    """
    no_go once ``stop_after`` consecutive grades are no-go grades; it stays
    no_go for the rest of the history.
    """
    bad = frozenset(no_go_grades)
    streak = 0
    for grade in grades:
        streak = streak + 1 if grade in bad else 0
        if streak >= stop_after:
            return NO_GO
    return GO


def pick_grade(distribution: np.ndarray, prefer_better: bool = True) -> int:
    """Argmax of a grade distribution; exact ties go to the better grade unless told otherwise."""
    if prefer_better:
        return int(np.argmax(distribution))
    return len(distribution) - 1 - int(np.argmax(distribution[::-1]))


class MonitorSession:
    """One consumer of one ordered frame stream."""

    def __init__(self, config: MonitorConfig, model_config: ModelConfig, params: Parameters):
        """
        Args:
            config: window, latch and remedy settings
            model_config: architecture of a 5-grade or 21-set-point classifier
            params: trained parameters

        Raises:
            ConfigurationError: the model predicts neither 5 grades nor 21 set points
        """
        n = model_config.n_classes
        if n == len(GRADES):
            self.grade_of_class = np.arange(n)
        elif n == len(valid_set_points()):
            self.grade_of_class = np.asarray(set_point_to_grade_mapping())
        else:
            raise ConfigurationError(f"Model has {n} classes; the monitor needs 5 grades or 21 set points")

        self.config = config
        self.model_config = model_config
        self.params = params
        self.logger = logger
        self.state = ProcessState(*config.set_point) if config.set_point is not None else None
        self.window: Deque[np.ndarray] = deque(maxlen=config.window_size)
        self.signals: List[QualitySignal] = []
        self.frames_seen = 0
        self.recent: Deque[QualityGrade] = deque(maxlen=config.stop_after)
        self.latched = False

    @classmethod
    def from_checkpoint(cls, config: MonitorConfig) -> 'MonitorSession':
        if config.checkpoint is None:
            raise ConfigurationError("Monitor needs a checkpoint")
        if not Path(config.checkpoint).is_file():
            raise ConfigurationError(f"Checkpoint not found: {config.checkpoint}")
        model_config, params = load_checkpoint(config.checkpoint)
        return cls(config, model_config, params)

    @property
    def decision(self) -> Decision:
        return NO_GO if self.latched else GO

    def reset(self) -> None:
        """Manual reset: clears the window, the recent grades and the latch."""
        self.window.clear()
        self.signals = []
        self.frames_seen = 0
        self.recent.clear()
        self.latched = False

    def _grades(self, probs: np.ndarray) -> np.ndarray:
        return np.bincount(self.grade_of_class, weights=probs, minlength=len(GRADES))

    def _check(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image, dtype=np.float32)
        if image.ndim == 2:
            image = image[None]
        if image.shape != tuple(self.model_config.input_shape):
            raise ShapeError(f"Frame shape {image.shape} does not match model input {self.model_config.input_shape}")
        return image

    def _accept(self, grade_probs: np.ndarray, frame_index: int) -> Optional[QualitySignal]:
        self.window.append(grade_probs)
        self.frames_seen += 1
        if len(self.window) < self.config.window_size:
            return None

        mean = np.mean(np.stack(self.window), axis=0)
        grade = GRADES[pick_grade(mean, self.config.prefer_better_grade)]
        # decide() over the last stop_after grades; the latch carries the older history
        self.recent.append(grade)
        if not self.latched and decide(self.recent, self.config.stop_after, self.config.no_go_grades) == NO_GO:
            self.latched = True
            self.logger.warning(f"NO GO latched at frame {frame_index}: "
                                f"{self.config.stop_after} consecutive windows graded no-go, last {grade.value}")

        remedy = suggest_remedy(self.state, grade) if self.state is not None else None
        signal = QualitySignal(frame_index, mean, grade, float(mean.max()), self.decision, remedy)
        self.signals.append(signal)
        return signal

    def push_frame(self, image: np.ndarray, frame_index: Optional[int] = None) -> Optional[QualitySignal]:
        """
        Classify one normalized frame and slide the window.

        Returns a signal once the window is full, otherwise None.

        Raises:
            ShapeError: the frame does not match the model input
        """
        image = self._check(image)
        index = self.frames_seen if frame_index is None else frame_index
        probs = predict(self.model_config, self.params, image)
        return self._accept(self._grades(probs), index)

    def replay(self, frames: Sequence[np.ndarray], frame_indices: Optional[Sequence[int]] = None,
               n_jobs: int = 1) -> List[QualitySignal]:
        """
        Classify a recorded sequence in one batch and run it through the
        window, as streaming the same frames would.
        """
        if len(frames) == 0:
            return []
        batch = np.stack([self._check(f) for f in frames])
        probs = evaluate(self.model_config, self.params, batch, n_jobs=n_jobs)
        start = self.frames_seen
        indices = frame_indices if frame_indices is not None else range(start, start + len(frames))
        signals = []
        for p, index in zip(probs, indices):
            signal = self._accept(self._grades(p), index)
            if signal is not None:
                signals.append(signal)
        return signals
