"""
On-disk dataset assembly: layer runs per set point, train/test split,
graymap images and a CSV manifest.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from utils import (
    ConfigurationError, DomainError, SPLIT_STREAM, atomic_path, derive_seed, make_rng, setup_logger
)
from .defects import MAX_OVERFILL, MAX_VOIDS
from .pgm import read_pgm, write_pgm
from .process import (
    GRADE_NAMES, GRADES, ProcessState, QualityGrade, SetPointClass, grade_table, valid_set_points
)
from .render import NOISE_SIGMA, normalize_intensity, render_layer

logger = setup_logger(__name__)

MANIFEST_NAME = 'manifest.csv'
IMAGE_DIR = 'images'
MANIFEST_COLUMNS = [
    'run_id', 'layer', 'speed_mms', 'temp_c', 'setpoint_class', 'grade', 'split', 'filename'
]
MIN_LAYERS_PER_RUN = 10

# run_id reserved for monitor streams, outside any dataset's run range
STREAM_RUN_ID = 2 ** 31

Labels = Literal['grade', 'setpoint']


class GenerationConfig(BaseModel):
    """Settings for one dataset generation."""

    model_config = ConfigDict(frozen=True)

    out_dir: Path
    train_per_class: int = Field(50, ge=1)
    test_per_class: int = Field(10, ge=0)
    labels: Labels = 'grade'
    image_size: int = Field(64, ge=8)
    layers_per_run: int = Field(MIN_LAYERS_PER_RUN, ge=MIN_LAYERS_PER_RUN)
    seed: int = 0
    noise_sigma: float = Field(NOISE_SIGMA, ge=0.0)
    max_voids: int = Field(MAX_VOIDS, ge=0)
    max_overfill: int = Field(MAX_OVERFILL, ge=0)
    grade_overrides: Dict[str, str] = Field(default_factory=dict)
    n_jobs: int = 1


@dataclass(frozen=True)
class RunPlan:
    run_id: int
    set_point: SetPointClass
    n_layers: int
    class_index: int


def class_names(labels: Labels) -> List[str]:
    if labels == 'grade':
        return list(GRADE_NAMES)
    return [sp.label for sp in valid_set_points()]


def _cells_by_class(config: GenerationConfig) -> List[List[SetPointClass]]:
    table = grade_table(config.grade_overrides)
    cells = valid_set_points()
    if config.labels == 'setpoint':
        return [[sp] for sp in cells]
    return [[sp for sp in cells if table[sp] is grade] for grade in GRADES]


def plan_runs(config: GenerationConfig) -> List[RunPlan]:
    """
    Split each class's image budget over its cells, then over runs of at
    least ``layers_per_run`` layers.

    Raises:
        ConfigurationError: a class has no cell, or a cell's share is too
            small for one full run
    """
    per_class = config.train_per_class + config.test_per_class
    names = class_names(config.labels)
    plans: List[RunPlan] = []
    run_id = 0
    for class_index, cells in enumerate(_cells_by_class(config)):
        if not cells:
            raise ConfigurationError(f"Class {names[class_index]} has no set point on the grid")
        base, extra = divmod(per_class, len(cells))
        for j, sp in enumerate(cells):
            share = base + (1 if j < extra else 0)
            if share < config.layers_per_run:
                raise ConfigurationError(
                    f"{share} images for {sp.label} (class {names[class_index]}) cannot fill a run "
                    f"of {config.layers_per_run} layers; raise the per-class counts"
                )
            n_runs = share // config.layers_per_run
            layers, rest = divmod(share, n_runs)
            for r in range(n_runs):
                plans.append(RunPlan(run_id, sp, layers + (1 if r < rest else 0), class_index))
                run_id += 1
    return plans


def image_filename(run_id: int, layer: int) -> str:
    return f"{IMAGE_DIR}/run{run_id:04d}_layer{layer:03d}.pgm"


def _render_run(plan: RunPlan, config: GenerationConfig, grades: Dict[SetPointClass, QualityGrade],
                set_point_classes: Dict[SetPointClass, int]) -> List[dict]:
    state = plan.set_point.state
    rows = []
    for layer in range(plan.n_layers):
        image = render_layer(
            state, layer, derive_seed(config.seed, plan.run_id, layer),
            width=config.image_size, height=config.image_size,
            noise_sigma=config.noise_sigma,
            max_voids=config.max_voids, max_overfill=config.max_overfill,
        )
        filename = image_filename(plan.run_id, layer)
        write_pgm(config.out_dir / filename, image)
        rows.append({
            'run_id': plan.run_id,
            'layer': layer,
            'speed_mms': int(state.speed),
            'temp_c': int(state.temperature),
            'setpoint_class': set_point_classes[plan.set_point],
            'grade': grades[plan.set_point].value,
            'split': 'train',
            'filename': filename,
            '_class': plan.class_index,
        })
    return rows


def _assign_splits(frame: pd.DataFrame, config: GenerationConfig) -> pd.DataFrame:
    split = np.array(['train'] * len(frame), dtype=object)
    for class_index, idx in frame.groupby('_class', sort=True).indices.items():
        rng = make_rng(config.seed, SPLIT_STREAM, int(class_index))
        chosen = rng.choice(len(idx), size=config.test_per_class, replace=False)
        split[idx[np.sort(chosen)]] = 'test'
    frame = frame.copy()
    frame['split'] = split
    return frame


def generate_dataset(config: GenerationConfig, progress: bool = False) -> pd.DataFrame:
    """
    Render the dataset described by ``config`` and write its manifest.

    Runs render independently (optionally in parallel); manifest rows are
    sorted by (run_id, layer) whatever the completion order.

    Returns:
        The manifest as a DataFrame

    Raises:
        ConfigurationError: counts not satisfiable
        OSError: output directory not writable
    """
    plans = plan_runs(config)
    out_dir = Path(config.out_dir)
    (out_dir / IMAGE_DIR).mkdir(parents=True, exist_ok=True)

    grades = grade_table(config.grade_overrides)
    set_point_classes = {sp: i for i, sp in enumerate(valid_set_points())}
    logger.info(f"Rendering {sum(p.n_layers for p in plans)} layers in {len(plans)} runs "
                f"({config.labels} labels, {config.image_size}x{config.image_size})")

    tasks = (delayed(_render_run)(plan, config, grades, set_point_classes) for plan in plans)
    results = Parallel(n_jobs=config.n_jobs)(
        tqdm(tasks, total=len(plans), desc='runs', disable=not progress)
    )
    rows = [row for run_rows in results for row in run_rows]
    frame = pd.DataFrame(rows).sort_values(['run_id', 'layer'], kind='stable').reset_index(drop=True)
    frame = _assign_splits(frame, config)[MANIFEST_COLUMNS]

    write_manifest(out_dir / MANIFEST_NAME, frame)
    counts = frame.groupby('split').size().to_dict()
    logger.info(f"Wrote {len(frame)} images ({counts.get('train', 0)} train, {counts.get('test', 0)} test)")
    return frame


def write_manifest(path: Path, frame: pd.DataFrame) -> None:
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, index=False, lineterminator='\n', encoding='utf-8')


def read_manifest(directory: Path) -> pd.DataFrame:
    """Read and check a dataset manifest; every referenced image must exist."""
    directory = Path(directory)
    frame = pd.read_csv(directory / MANIFEST_NAME, dtype={'grade': str, 'split': str, 'filename': str})
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise DomainError(f"Manifest in {directory} lacks columns: {', '.join(missing)}")
    absent = [f for f in frame['filename'] if not (directory / f).is_file()]
    if absent:
        raise FileNotFoundError(f"{len(absent)} manifest images missing under {directory}, e.g. {absent[0]}")
    return frame


def render_stream(state: ProcessState, n_frames: int, seed: int, out_dir: Path,
                  image_size: int = 64, noise_sigma: float = NOISE_SIGMA) -> List[Path]:
    """
    Write ``n_frames`` consecutive layers of one run as frame_NNNNN.pgm.

    Filenames sort lexicographically in layer order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for layer in tqdm(range(n_frames), desc='frames', disable=n_frames < 200):
        image = render_layer(state, layer, derive_seed(seed, STREAM_RUN_ID, layer),
                             width=image_size, height=image_size, noise_sigma=noise_sigma)
        paths.append(write_pgm(out_dir / f"frame_{layer:05d}.pgm", image))
    logger.info(f"Wrote {n_frames}-frame stream at ({state.speed:g} mm/s, {state.temperature:g} C) to {out_dir}")
    return paths


@dataclass
class Dataset:
    """Normalized images (N x 1 x H x W, float32) with integer labels."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    class_names: List[str]
    test_rows: Optional[pd.DataFrame] = None

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def input_shape(self) -> tuple:
        return tuple(self.x_train.shape[1:])


def load_image(path: Path) -> np.ndarray:
    return normalize_intensity(read_pgm(path)).astype(np.float32)


def labels_for(frame: pd.DataFrame, labels: Labels) -> np.ndarray:
    if labels == 'grade':
        return frame['grade'].map(GRADE_NAMES.index).to_numpy(dtype=np.int64)
    return frame['setpoint_class'].to_numpy(dtype=np.int64)


def load_dataset(directory: Path, labels: Labels = 'grade') -> Dataset:
    """
    Load a generated dataset with either labeling of the same images.

    Raises:
        ConfigurationError: the train or test split is empty
    """
    directory = Path(directory)
    frame = read_manifest(directory)
    parts = {}
    for split in ('train', 'test'):
        rows = frame[frame['split'] == split].reset_index(drop=True)
        if rows.empty:
            raise ConfigurationError(f"Dataset {directory} has an empty {split} split")
        images = np.stack([load_image(directory / f) for f in rows['filename']])[:, None, :, :]
        parts[split] = (images, labels_for(rows, labels), rows)
    logger.info(f"Loaded {len(parts['train'][1])} train / {len(parts['test'][1])} test images "
                f"from {directory} ({labels} labels)")
    return Dataset(
        x_train=parts['train'][0], y_train=parts['train'][1],
        x_test=parts['test'][0], y_test=parts['test'][1],
        class_names=class_names(labels), test_rows=parts['test'][2],
    )
