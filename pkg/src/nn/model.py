"""
Sequential CNN: architecture description, parameters, forward and
backward passes, and the plain SGD update.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from utils import ShapeError, StaleCacheError, make_rng
from . import functional as F

Parameters = Dict[str, np.ndarray]
Gradients = Dict[str, np.ndarray]

LayerKind = Literal['conv', 'relu', 'maxpool', 'dropout', 'flatten', 'fc', 'softmax']
PARAMETRIC = ('conv', 'fc')


class LayerSpec(BaseModel):
    """One layer descriptor. Fields a kind does not use stay at 0."""

    kind: LayerKind
    out_channels: int = Field(0, ge=0)
    kernel: int = Field(0, ge=0)
    stride: int = Field(0, ge=0)
    pad: int = Field(0, ge=0)
    units: int = Field(0, ge=0)
    rate: float = Field(0.0, ge=0.0, lt=1.0)

    @classmethod
    def conv(cls, out_channels: int, kernel: int = 3, stride: int = 1, pad: int = 1) -> 'LayerSpec':
        return cls(kind='conv', out_channels=out_channels, kernel=kernel, stride=stride, pad=pad)

    @classmethod
    def fc(cls, units: int) -> 'LayerSpec':
        return cls(kind='fc', units=units)

    @classmethod
    def dropout(cls, rate: float) -> 'LayerSpec':
        return cls(kind='dropout', rate=rate)

    @classmethod
    def of(cls, kind: LayerKind) -> 'LayerSpec':
        return cls(kind=kind)


class ModelConfig(BaseModel):
    """Ordered layer stack for a (C, H, W) input and ``n_classes`` outputs."""

    input_shape: Tuple[int, int, int] = (1, 64, 64)
    n_classes: int = Field(5, ge=2)
    layers: List[LayerSpec]
    conv_method: Literal['direct', 'im2col'] = 'im2col'

    @classmethod
    def default(cls, n_classes: int = 5, image_size: int = 64,
                channels: Sequence[int] = (8, 16, 32), hidden: int = 128,
                dropout_rates: Tuple[float, float] = (0.25, 0.5)) -> 'ModelConfig':
        """Three conv/ReLU/pool stages, dropout, FC-ReLU, dropout, FC, softmax."""
        layers: List[LayerSpec] = []
        for c in channels:
            layers += [LayerSpec.conv(c), LayerSpec.of('relu'), LayerSpec.of('maxpool')]
        layers += [
            LayerSpec.dropout(dropout_rates[0]),
            LayerSpec.of('flatten'),
            LayerSpec.fc(hidden),
            LayerSpec.of('relu'),
            LayerSpec.dropout(dropout_rates[1]),
            LayerSpec.fc(n_classes),
            LayerSpec.of('softmax'),
        ]
        return cls(input_shape=(1, image_size, image_size), n_classes=n_classes, layers=layers)

    def layer_shapes(self) -> List[Tuple[int, ...]]:
        """
        Output shape (without batch axis) of every layer.

        Raises:
            ShapeError: the stack does not chain from the input shape or
                does not end in fc(n_classes) -> softmax
        """
        shape: Tuple[int, ...] = tuple(self.input_shape)
        shapes = []
        for i, layer in enumerate(self.layers):
            if layer.kind == 'conv':
                if len(shape) != 3 or layer.kernel < 1 or layer.stride < 1 or layer.out_channels < 1:
                    raise ShapeError(f"Layer {i}: conv needs a C x H x W input and positive sizes, got {shape}")
                h = F.conv_output_size(shape[1], layer.kernel, layer.stride, layer.pad)
                w = F.conv_output_size(shape[2], layer.kernel, layer.stride, layer.pad)
                shape = (layer.out_channels, h, w)
            elif layer.kind == 'maxpool':
                if len(shape) != 3 or shape[1] % 2 or shape[2] % 2:
                    raise ShapeError(f"Layer {i}: 2x2 pooling needs even spatial dims, got {shape}")
                shape = (shape[0], shape[1] // 2, shape[2] // 2)
            elif layer.kind == 'flatten':
                shape = (int(np.prod(shape)),)
            elif layer.kind == 'fc':
                if len(shape) != 1 or layer.units < 1:
                    raise ShapeError(f"Layer {i}: fc needs a flat input and units >= 1, got {shape}")
                shape = (layer.units,)
            elif layer.kind == 'softmax' and i != len(self.layers) - 1:
                raise ShapeError(f"Layer {i}: softmax must be the last layer")
            shapes.append(shape)
        if not self.layers or self.layers[-1].kind != 'softmax' or shape != (self.n_classes,):
            raise ShapeError(f"Model must end in fc({self.n_classes}) -> softmax, ends with shape {shape}")
        return shapes

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Weight/bias shapes keyed '<layer index>.weight' / '.bias', in declaration order."""
        shapes = self.layer_shapes()
        result: Dict[str, Tuple[int, ...]] = {}
        prev: Tuple[int, ...] = tuple(self.input_shape)
        for i, (layer, out) in enumerate(zip(self.layers, shapes)):
            if layer.kind == 'conv':
                result[f"{i}.weight"] = (layer.out_channels, prev[0], layer.kernel, layer.kernel)
                result[f"{i}.bias"] = (layer.out_channels,)
            elif layer.kind == 'fc':
                result[f"{i}.weight"] = (layer.units, prev[0])
                result[f"{i}.bias"] = (layer.units,)
            prev = out
        return result

    def layer_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for layer in self.layers:
            counts[layer.kind] = counts.get(layer.kind, 0) + 1
        return counts


def _check_params(config: ModelConfig, params: Parameters) -> None:
    expected = config.parameter_shapes()
    if list(params) != list(expected):
        raise ShapeError(f"Parameter keys {list(params)} do not match the model {list(expected)}")
    for key, shape in expected.items():
        if params[key].shape != shape:
            raise ShapeError(f"{key} has shape {params[key].shape}, model needs {shape}")


def init_weights(config: ModelConfig, seed: int, dtype=np.float32) -> Parameters:
    """He-normal weights (std = sqrt(2 / fan_in)) and zero biases from a seeded stream."""
    rng = make_rng(seed)
    params: Parameters = {}
    for key, shape in config.parameter_shapes().items():
        if key.endswith('.bias'):
            params[key] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[1:]))
            params[key] = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
    return params


@dataclass
class ForwardCache:
    mode: str
    params: Parameters
    probs: np.ndarray
    entries: List[Any] = field(default_factory=list)


def model_forward(config: ModelConfig, params: Parameters, batch: np.ndarray, mode: str = 'eval',
                  rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, ForwardCache]:
    """
    Run the layer stack on a B x C x H x W batch.

    Returns:
        (B x n_classes class distributions, cache for model_backward)
    """
    batch = np.asarray(batch)
    if batch.ndim != 4 or tuple(batch.shape[1:]) != tuple(config.input_shape):
        raise ShapeError(f"Batch shape {batch.shape} does not match model input {config.input_shape}")
    _check_params(config, params)

    entries: List[Any] = []
    x = batch
    for i, layer in enumerate(config.layers):
        if layer.kind == 'conv':
            entries.append(x)
            x = F.conv2d(x, params[f"{i}.weight"], params[f"{i}.bias"],
                         stride=layer.stride, pad=layer.pad, method=config.conv_method)
        elif layer.kind == 'relu':
            entries.append(x)
            x = F.relu(x)
        elif layer.kind == 'maxpool':
            x, argmax = F.maxpool2x2(x)
            entries.append(argmax)
        elif layer.kind == 'dropout':
            x, mask = F.dropout(x, layer.rate, mode, rng)
            entries.append(mask)
        elif layer.kind == 'flatten':
            entries.append(x.shape)
            x = x.reshape(x.shape[0], -1)
        elif layer.kind == 'fc':
            entries.append(x)
            x = F.fully_connected(x, params[f"{i}.weight"], params[f"{i}.bias"])
        else:
            entries.append(None)
            x = F.softmax(x)
    return x, ForwardCache(mode=mode, params=dict(params), probs=x, entries=entries)


def model_backward(config: ModelConfig, params: Parameters, cache: ForwardCache,
                   true_classes: Sequence[int]) -> Gradients:
    """
    Gradient of the batch-mean cross-entropy with respect to every parameter.

    Softmax and cross-entropy are fused: the logits gradient is
    (probs - one_hot) / B.

    Raises:
        StaleCacheError: cache is not from a train-mode forward with these params
    """
    if cache.mode != 'train':
        raise StaleCacheError(f"Backward needs a train-mode forward cache, got mode {cache.mode!r}")
    if list(cache.params) != list(params) or any(cache.params[k] is not params[k] for k in params):
        raise StaleCacheError("Forward cache was computed with different parameters")
    probs = cache.probs
    classes = np.asarray(true_classes, dtype=np.int64)
    n = probs.shape[0]
    if classes.shape != (n,):
        raise ShapeError(f"{classes.shape[0] if classes.ndim else 0} labels for a batch of {n}")

    d = probs.copy()
    d[np.arange(n), classes] -= 1.0
    d /= n

    grads: Gradients = {}
    for i in range(len(config.layers) - 2, -1, -1):
        layer = config.layers[i]
        entry = cache.entries[i]
        if layer.kind == 'fc':
            d, grads[f"{i}.weight"], grads[f"{i}.bias"] = F.fully_connected_backward(d, entry, params[f"{i}.weight"])
        elif layer.kind == 'conv':
            d, grads[f"{i}.weight"], grads[f"{i}.bias"] = F.conv2d_backward(
                d, entry, params[f"{i}.weight"], stride=layer.stride, pad=layer.pad)
        elif layer.kind == 'relu':
            d = F.relu_backward(d, entry)
        elif layer.kind == 'maxpool':
            d = F.maxpool2x2_backward(d, entry)
        elif layer.kind == 'dropout':
            d = F.dropout_backward(d, entry)
        elif layer.kind == 'flatten':
            d = d.reshape(entry)
    return {key: grads[key] for key in params}


def sgd_step(params: Parameters, grads: Gradients, learning_rate: float) -> Parameters:
    """p <- p - lr * g, returned as a new parameter set (dtypes kept)."""
    if list(params) != list(grads):
        raise ShapeError(f"Gradient keys {list(grads)} do not match parameters {list(params)}")
    updated: Parameters = {}
    for key, p in params.items():
        g = grads[key]
        if np.shape(g) != p.shape:
            raise ShapeError(f"Gradient for {key} has shape {np.shape(g)}, parameter has {p.shape}")
        updated[key] = (p - learning_rate * g).astype(p.dtype, copy=False)
    return updated


def predict(config: ModelConfig, params: Parameters, image: np.ndarray) -> np.ndarray:
    """Class distribution for one normalized image (H x W or C x H x W), eval mode."""
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[None]
    probs, _ = model_forward(config, params, image[None], mode='eval')
    return probs[0]
