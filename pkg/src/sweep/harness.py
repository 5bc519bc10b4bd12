"""
Hyperparameter sweeps: accuracy against epochs, learning rate and batch
size, exported as CSV.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence

import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, Field, field_validator, model_validator
from tqdm import tqdm

from imagegen.dataset import Dataset, load_dataset
from nn.model import ModelConfig
from nn.training import Hyperparams, TrainingTrace, train
from utils import ConfigurationError, atomic_path, derive_seed, setup_logger

logger = setup_logger(__name__)

Axis = Literal['epoch', 'learning_rate', 'batch_size']
AXIS_CODES = {'epoch': 1, 'learning_rate': 2, 'batch_size': 3}
SWEEP_COLUMNS = ['axis', 'value', 'repetition', 'test_acc', 'train_acc', 'wall_seconds', 'diverged']
EPOCH_COLUMNS = ['learning_rate', 'epoch', 'train_acc', 'test_acc', 'mean_loss', 'wall_seconds']


class SweepSpec(BaseModel):
    """
    One sweep: the axis, the values it takes, fixed settings for the
    other hyperparameters and the dataset to train on.
    """

    axis: Axis
    values: List[float]
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)
    dataset_dir: Optional[Path] = None
    labels: Literal['grade', 'setpoint'] = 'grade'
    repetitions: int = Field(3, ge=1)
    # extra learning rates overlaid on an epoch sweep
    compare_learning_rates: List[float] = Field(default_factory=list)

    @field_validator('values')
    @classmethod
    def _increasing(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("values must not be empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("values must be strictly increasing")
        return values

    @model_validator(mode='after')
    def _axis_values(self) -> 'SweepSpec':
        if self.axis == 'learning_rate':
            if self.values[0] < 0:
                raise ValueError("learning rates must be nonnegative")
        elif self.values[0] < 1 or any(v != int(v) for v in self.values):
            raise ValueError(f"{self.axis} values must be positive integers")
        if any(lr < 0 for lr in self.compare_learning_rates):
            raise ValueError("learning rates must be nonnegative")
        return self

    def run_hyperparams(self, value: float, value_index: int, repetition: int) -> Hyperparams:
        """Settings of one point; the seed depends only on (master seed, value index, repetition)."""
        update = {'seed': derive_seed(self.hyperparams.seed, AXIS_CODES[self.axis], value_index, repetition)}
        if self.axis == 'learning_rate':
            update['learning_rate'] = float(value)
        elif self.axis == 'batch_size':
            update['batch_size'] = int(value)
        else:
            update['epochs'] = int(value)
        return self.hyperparams.model_copy(update=update)


@dataclass(frozen=True)
class SweepRecord:
    axis: str
    value: float
    repetition: int
    test_acc: float
    train_acc: float
    wall_seconds: float
    diverged: bool


@dataclass
class SweepResult:
    axis: str
    records: List[SweepRecord] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([vars(r) for r in self.records], columns=SWEEP_COLUMNS)
        if self.axis != 'learning_rate':
            frame['value'] = frame['value'].astype('int64')
        return frame


def _dataset(spec: SweepSpec, dataset: Optional[Dataset]) -> Dataset:
    if dataset is not None:
        return dataset
    if spec.dataset_dir is None:
        raise ConfigurationError("Sweep needs a dataset directory or a loaded dataset")
    return load_dataset(spec.dataset_dir, spec.labels)


def _model(dataset: Dataset, model_config: Optional[ModelConfig]) -> ModelConfig:
    if model_config is not None:
        return model_config
    return ModelConfig.default(n_classes=dataset.n_classes, image_size=dataset.input_shape[-1])


def _run_point(spec: SweepSpec, model_config: ModelConfig, dataset: Dataset,
               value: float, value_index: int, repetition: int) -> SweepRecord:
    hyperparams = spec.run_hyperparams(value, value_index, repetition)
    try:
        _, trace = train(model_config, dataset, hyperparams)
    except (FloatingPointError, OverflowError) as e:
        logger.warning(f"{spec.axis}={value:g} rep {repetition}: numeric failure ({e}); marked diverged")
        return SweepRecord(spec.axis, value, repetition, float('nan'), float('nan'), float('nan'), True)
    final = trace.final
    return SweepRecord(spec.axis, value, repetition, final.test_accuracy, final.train_accuracy,
                       final.wall_seconds, trace.diverged)


def _point_sweep(spec: SweepSpec, dataset: Optional[Dataset], model_config: Optional[ModelConfig],
                 n_jobs: int, progress: bool) -> SweepResult:
    data = _dataset(spec, dataset)
    model = _model(data, model_config)
    points = [(v, i, r) for i, v in enumerate(spec.values) for r in range(spec.repetitions)]
    logger.info(f"Sweeping {spec.axis} over {spec.values} x {spec.repetitions} repetitions "
                f"({len(points)} runs, n_jobs={n_jobs})")

    tasks = (delayed(_run_point)(spec, model, data, v, i, r) for v, i, r in points)
    records = Parallel(n_jobs=n_jobs)(tqdm(tasks, total=len(points), desc=spec.axis, disable=not progress))
    for rec in records:
        flag = ' DIVERGED' if rec.diverged else ''
        logger.info(f"  {spec.axis}={rec.value:g} rep={rec.repetition}: test={rec.test_acc:.3f} "
                    f"train={rec.train_acc:.3f} ({rec.wall_seconds:.1f}s){flag}")
    return SweepResult(spec.axis, list(records))


def lr_sweep(spec: SweepSpec, dataset: Optional[Dataset] = None, model_config: Optional[ModelConfig] = None,
             n_jobs: int = 1, progress: bool = False) -> SweepResult:
    """
    One independently seeded training run per (learning rate, repetition).

    Divergent runs are flagged in their record and do not stop the sweep.
    """
    if spec.axis != 'learning_rate':
        raise ConfigurationError(f"lr_sweep needs axis 'learning_rate', got {spec.axis!r}")
    return _point_sweep(spec, dataset, model_config, n_jobs, progress)


def batch_sweep(spec: SweepSpec, dataset: Optional[Dataset] = None, model_config: Optional[ModelConfig] = None,
                n_jobs: int = 1, progress: bool = False) -> SweepResult:
    """
    As lr_sweep, varying the batch size.

    Raises:
        ConfigurationError: a batch size exceeds the train split
    """
    if spec.axis != 'batch_size':
        raise ConfigurationError(f"batch_sweep needs axis 'batch_size', got {spec.axis!r}")
    data = _dataset(spec, dataset)
    too_big = [int(v) for v in spec.values if v > len(data.x_train)]
    if too_big:
        raise ConfigurationError(f"Batch sizes {too_big} exceed the {len(data.x_train)}-image train split")
    return _point_sweep(spec, data, model_config, n_jobs, progress)


def epoch_sweep(spec: SweepSpec, dataset: Optional[Dataset] = None, model_config: Optional[ModelConfig] = None,
                progress: bool = False) -> TrainingTrace:
    """A single run of max(values) epochs; its per-epoch trace is the sweep."""
    if spec.axis != 'epoch':
        raise ConfigurationError(f"epoch_sweep needs axis 'epoch', got {spec.axis!r}")
    data = _dataset(spec, dataset)
    hyperparams = spec.hyperparams.model_copy(update={'epochs': int(max(spec.values))})
    _, trace = train(_model(data, model_config), data, hyperparams, progress=progress)
    return trace


def compare_epoch_traces(spec: SweepSpec, dataset: Optional[Dataset] = None,
                         model_config: Optional[ModelConfig] = None,
                         n_jobs: int = 1, progress: bool = False) -> Dict[float, TrainingTrace]:
    """
    Epoch traces for the base learning rate and every entry of
    ``compare_learning_rates``, all from the same seed.
    """
    data = _dataset(spec, dataset)
    model = _model(data, model_config)
    rates = [spec.hyperparams.learning_rate] + [lr for lr in spec.compare_learning_rates
                                                if lr != spec.hyperparams.learning_rate]
    specs = [spec.model_copy(update={'hyperparams': spec.hyperparams.model_copy(update={'learning_rate': lr})})
             for lr in rates]
    traces = Parallel(n_jobs=n_jobs)(delayed(epoch_sweep)(s, data, model, progress) for s in specs)
    return dict(zip(rates, traces))


def emit_csv(result: SweepResult, path: Path) -> Path:
    """Write axis,value,repetition,test_acc,train_acc,wall_seconds,diverged in (value, repetition) order."""
    frame = result.to_frame().sort_values(['value', 'repetition'], kind='stable')
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, index=False, lineterminator='\n')
    return Path(path)


def read_csv(path: Path) -> SweepResult:
    frame = pd.read_csv(path, dtype={'axis': str})
    if list(frame.columns) != SWEEP_COLUMNS:
        raise ConfigurationError(f"{path} is not a sweep CSV")
    axis = frame['axis'].iloc[0] if len(frame) else ''
    return SweepResult(axis, [
        SweepRecord(str(row.axis), float(row.value), int(row.repetition), float(row.test_acc),
                    float(row.train_acc), float(row.wall_seconds), bool(row.diverged))
        for row in frame.itertuples(index=False)
    ])


def write_epoch_csv(traces: Dict[float, TrainingTrace], path: Path) -> Path:
    """Per-epoch rows for every learning rate of an epoch sweep."""
    frames = []
    for lr, trace in traces.items():
        frame = trace.to_frame()
        frame.insert(0, 'learning_rate', lr)
        frames.append(frame)
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=EPOCH_COLUMNS)
    with atomic_path(path) as tmp:
        frame[EPOCH_COLUMNS].to_csv(tmp, index=False, lineterminator='\n', float_format='%.6f')
    return Path(path)
