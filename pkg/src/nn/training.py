"""
Mini-batch SGD training loop, evaluation and trace export.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, Field
from tqdm import tqdm

from utils import ConfigurationError, ShapeError, atomic_path, derive_seed, make_rng, setup_logger
from .functional import cross_entropy
from .model import Gradients, ModelConfig, Parameters, init_weights, model_backward, model_forward, sgd_step

logger = setup_logger(__name__)

EPOCH_STREAM = 1
CHUNK_STREAM = 2
EVAL_BATCH = 256
TRACE_COLUMNS = ['epoch', 'train_acc', 'test_acc', 'mean_loss', 'wall_seconds']


class Hyperparams(BaseModel):
    epochs: int = Field(50, ge=1)
    # 0 is allowed so a sweep can include the untrained baseline
    learning_rate: float = Field(0.01, ge=0.0)
    batch_size: int = Field(32, ge=1)
    seed: int = 0


@dataclass
class TrainingRecord:
    epoch: int
    train_accuracy: float
    test_accuracy: float
    mean_loss: float
    wall_seconds: float
    steps: int = 0


@dataclass
class TrainingTrace:
    """One record per completed epoch; wall_seconds is cumulative training time."""

    records: List[TrainingRecord] = field(default_factory=list)
    diverged: bool = False

    @property
    def final(self) -> Optional[TrainingRecord]:
        return self.records[-1] if self.records else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[r.epoch, r.train_accuracy, r.test_accuracy, r.mean_loss, r.wall_seconds] for r in self.records],
            columns=TRACE_COLUMNS,
        )


def write_trace_csv(trace: TrainingTrace, path: Path) -> Path:
    """CSV epoch,train_acc,test_acc,mean_loss,wall_seconds."""
    with atomic_path(path) as tmp:
        trace.to_frame().to_csv(tmp, index=False, lineterminator='\n', float_format='%.6f')
    return Path(path)


def read_trace_csv(path: Path) -> TrainingTrace:
    frame = pd.read_csv(path)
    return TrainingTrace(records=[
        TrainingRecord(int(row.epoch), float(row.train_acc), float(row.test_acc),
                       float(row.mean_loss), float(row.wall_seconds))
        for row in frame.itertuples(index=False)
    ])


def evaluate(config: ModelConfig, params: Parameters, x: np.ndarray,
             batch_size: int = EVAL_BATCH, n_jobs: int = 1) -> np.ndarray:
    """
    Eval-mode class distributions for every item of ``x``.

    With ``n_jobs > 1`` chunks run on threads; results are concatenated in
    item order, so the output does not depend on n_jobs.
    """
    starts = range(0, len(x), batch_size)
    if n_jobs == 1:
        parts = [model_forward(config, params, x[s:s + batch_size], mode='eval')[0] for s in starts]
    else:
        parts = Parallel(n_jobs=n_jobs, prefer='threads')(
            delayed(lambda s: model_forward(config, params, x[s:s + batch_size], mode='eval')[0])(s)
            for s in starts
        )
    if not parts:
        return np.zeros((0, config.n_classes))
    return np.concatenate(parts)


def accuracy(config: ModelConfig, params: Parameters, x: np.ndarray, y: np.ndarray, n_jobs: int = 1) -> float:
    if len(x) == 0:
        raise ConfigurationError("Cannot compute accuracy of an empty split")
    predictions = evaluate(config, params, x, n_jobs=n_jobs).argmax(axis=1)
    return float(np.mean(predictions == y))


def _batch_gradients(config: ModelConfig, params: Parameters, xb: np.ndarray, yb: np.ndarray,
                     rng: np.random.Generator, n_jobs: int, chunk_seed: int) -> Tuple[float, Gradients]:
    if n_jobs == 1 or len(xb) < 2:
        probs, cache = model_forward(config, params, xb, mode='train', rng=rng)
        return cross_entropy(probs, yb), model_backward(config, params, cache, yb)

    # Items split into fixed chunks; gradients reduced in chunk order so the
    # result is the same however the threads finish. Each chunk draws its own
    # dropout masks, so the masks depend on n_jobs.
    bounds = np.array_split(np.arange(len(xb)), min(n_jobs, len(xb)))

    def run(k, idx):
        probs, cache = model_forward(config, params, xb[idx], mode='train', rng=make_rng(chunk_seed, k))
        return len(idx), cross_entropy(probs, yb[idx]), model_backward(config, params, cache, yb[idx])

    results = Parallel(n_jobs=n_jobs, prefer='threads')(delayed(run)(k, idx) for k, idx in enumerate(bounds))
    total = len(xb)
    loss = sum(n * l for n, l, _ in results) / total
    grads = {key: sum(g[key] * (n / total) for n, _, g in results) for key in params}
    return loss, grads


def _finite(loss: float, grads: Gradients) -> bool:
    return bool(np.isfinite(loss)) and all(np.all(np.isfinite(g)) for g in grads.values())


def train(config: ModelConfig, dataset, hyperparams: Hyperparams, n_jobs: int = 1,
          progress: bool = False) -> Tuple[Parameters, TrainingTrace]:
    """
    Train from He-initialized weights with mini-batch SGD.

    Each epoch shuffles the train split with a seeded stream, steps once
    per batch (the last batch may be short), then records eval-mode
    accuracy on both splits. A non-finite loss or gradient aborts the run:
    the offending step is not applied, the epoch is recorded and the trace
    is flagged diverged.

    Runs are bit-reproducible for a fixed seed and n_jobs. Changing n_jobs
    changes how a batch is chunked and which stream each chunk's dropout
    masks come from, so a model with dropout trains differently. Without
    dropout only the float summation order changes.

    Args:
        config: model architecture
        dataset: object with x_train, y_train, x_test, y_test arrays
        hyperparams: epochs, learning rate, batch size, seed
        n_jobs: threads per batch; 1 is strictly sequential. Part of the
            reproducibility key along with the seed

    Returns:
        (trained parameters, training trace)
    """
    if len(dataset.x_train) == 0 or len(dataset.x_test) == 0:
        raise ConfigurationError("Training needs nonempty train and test splits")
    if tuple(dataset.x_train.shape[1:]) != tuple(config.input_shape):
        raise ShapeError(f"Images {dataset.x_train.shape[1:]} do not match model input {config.input_shape}")
    if max(int(dataset.y_train.max()), int(dataset.y_test.max())) >= config.n_classes:
        raise ConfigurationError(f"Labels exceed the model's {config.n_classes} classes")

    params = init_weights(config, hyperparams.seed)
    trace = TrainingTrace()
    n = len(dataset.x_train)
    elapsed = 0.0

    epochs = tqdm(range(1, hyperparams.epochs + 1), desc='epochs', disable=not progress)
    for epoch in epochs:
        rng = make_rng(hyperparams.seed, EPOCH_STREAM, epoch)
        order = rng.permutation(n)
        loss_sum = 0.0
        steps = 0
        started = time.perf_counter()
        with np.errstate(over='ignore', invalid='ignore'):
            for b, start in enumerate(range(0, n, hyperparams.batch_size)):
                idx = order[start:start + hyperparams.batch_size]
                loss, grads = _batch_gradients(config, params, dataset.x_train[idx], dataset.y_train[idx],
                                               rng, n_jobs, chunk_seed=derive_seed(hyperparams.seed, CHUNK_STREAM, epoch, b))
                if not _finite(loss, grads):
                    trace.diverged = True
                    loss_sum = float('inf')
                    break
                params = sgd_step(params, grads, hyperparams.learning_rate)
                loss_sum += loss * len(idx)
                steps += 1
        elapsed += time.perf_counter() - started

        record = TrainingRecord(
            epoch=epoch,
            train_accuracy=accuracy(config, params, dataset.x_train, dataset.y_train, n_jobs),
            test_accuracy=accuracy(config, params, dataset.x_test, dataset.y_test, n_jobs),
            mean_loss=loss_sum / n if not trace.diverged else float('inf'),
            wall_seconds=elapsed,
            steps=steps,
        )
        trace.records.append(record)
        logger.debug(f"epoch {epoch}: loss={record.mean_loss:.4f} train={record.train_accuracy:.3f} "
                     f"test={record.test_accuracy:.3f}")
        if trace.diverged:
            logger.warning(f"Training diverged in epoch {epoch} (lr={hyperparams.learning_rate}); stopping")
            break

    final = trace.final
    logger.info(f"Trained {len(trace.records)} epochs: train={final.train_accuracy:.3f} "
                f"test={final.test_accuracy:.3f} ({final.wall_seconds:.1f}s)")
    return params, trace
