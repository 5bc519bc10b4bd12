"""
Finite-difference check of model_backward.
"""

from typing import Dict, Sequence

import numpy as np

from .functional import cross_entropy
from .model import ModelConfig, Parameters, model_backward, model_forward

GRADCHECK_STREAM = 3


def _loss(config: ModelConfig, params: Parameters, x: np.ndarray, y: np.ndarray) -> float:
    # Dropout layers are the identity in eval mode, which keeps the loss deterministic.
    probs, _ = model_forward(config, params, x, mode='eval')
    return cross_entropy(probs, y)


def check_gradients(config: ModelConfig, params: Parameters, x: np.ndarray, y: Sequence[int],
                    h: float = 1e-4, max_entries: int = 0) -> Dict[str, float]:
    """
    Relative error ||analytic - numeric|| / max(||analytic|| + ||numeric||, tiny)
    per parameter tensor, with central differences of step ``h``.

    Computation is done in float64. Dropout rates are zeroed so train and
    eval forward passes agree. ``max_entries > 0`` limits each tensor to
    its first entries in flat order.
    """
    config = config.model_copy(update={
        'layers': [layer.model_copy(update={'rate': 0.0}) for layer in config.layers],
    })
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)

    probs, cache = model_forward(config, params, x, mode='train', rng=np.random.default_rng(GRADCHECK_STREAM))
    analytic = model_backward(config, params, cache, y)

    errors: Dict[str, float] = {}
    for key, p in params.items():
        flat = p.reshape(-1)
        count = flat.size if max_entries <= 0 else min(max_entries, flat.size)
        numeric = np.zeros(count)
        for i in range(count):
            saved = flat[i]
            flat[i] = saved + h
            up = _loss(config, params, x, y)
            flat[i] = saved - h
            down = _loss(config, params, x, y)
            flat[i] = saved
            numeric[i] = (up - down) / (2 * h)
        exact = analytic[key].reshape(-1)[:count]
        denom = max(np.linalg.norm(exact) + np.linalg.norm(numeric), 1e-12)
        errors[key] = float(np.linalg.norm(exact - numeric) / denom)
    return errors
