"""
Binary checkpoint format.

    magic          4 bytes  b'AMQM'
    version        u32 LE
    input dims     3 x u32 LE (C, H, W)
    class count    u32 LE
    layer count    u32 LE
    layer table    per layer: kind, out_channels, kernel, stride, pad,
                   units as u32 LE, then rate as f32 LE (28 bytes)
    arrays         per parametric layer in declaration order: weight then
                   bias, f32 LE, shapes implied by the table
    checksum       first 8 bytes of BLAKE2b over everything before it
"""

import hashlib
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from pydantic import ValidationError

from utils import CheckpointFormatError, ShapeError, atomic_write_bytes, setup_logger
from .model import LayerSpec, ModelConfig, Parameters

logger = setup_logger(__name__)

MAGIC = b'AMQM'
VERSION = 1
CHECKSUM_SIZE = 8

LAYER_CODES = {'conv': 1, 'relu': 2, 'maxpool': 3, 'dropout': 4, 'flatten': 5, 'fc': 6, 'softmax': 7}
LAYER_KINDS = {code: kind for kind, code in LAYER_CODES.items()}

_HEADER = struct.Struct('<4sIIIIII')
_LAYER = struct.Struct('<IIIIIIf')


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=CHECKSUM_SIZE).digest()


def encode_checkpoint(config: ModelConfig, params: Parameters) -> bytes:
    shapes = config.parameter_shapes()
    if list(params) != list(shapes) or any(params[k].shape != s for k, s in shapes.items()):
        raise ShapeError("Parameters do not match the model configuration")
    parts = [_HEADER.pack(MAGIC, VERSION, *config.input_shape, config.n_classes, len(config.layers))]
    for layer in config.layers:
        parts.append(_LAYER.pack(LAYER_CODES[layer.kind], layer.out_channels, layer.kernel,
                                 layer.stride, layer.pad, layer.units, layer.rate))
    for key in shapes:
        parts.append(np.ascontiguousarray(params[key], dtype='<f4').tobytes())
    body = b''.join(parts)
    return body + _checksum(body)


def save_checkpoint(config: ModelConfig, params: Parameters, path: Union[str, Path]) -> Path:
    """Write a checkpoint; weights are stored as 32-bit floats."""
    path = atomic_write_bytes(path, encode_checkpoint(config, params))
    logger.info(f"Saved checkpoint {path} ({config.n_classes} classes, {len(params)} arrays)")
    return path


def decode_checkpoint(data: bytes) -> Tuple[ModelConfig, Parameters]:
    if len(data) < _HEADER.size + CHECKSUM_SIZE:
        raise CheckpointFormatError(f"File too short for a header ({len(data)} bytes)", len(data))
    magic, version, c, h, w, n_classes, n_layers = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"Bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise CheckpointFormatError(f"Unsupported format version {version}", 4)
    end = len(data) - CHECKSUM_SIZE
    if _checksum(data[:end]) != data[end:]:
        raise CheckpointFormatError("Checksum mismatch", end)

    offset = _HEADER.size
    layers = []
    for i in range(n_layers):
        if offset + _LAYER.size > end:
            raise CheckpointFormatError(f"Truncated layer table at layer {i}", offset)
        code, out_channels, kernel, stride, pad, units, rate = _LAYER.unpack_from(data, offset)
        if code not in LAYER_KINDS:
            raise CheckpointFormatError(f"Unknown layer code {code} at layer {i}", offset)
        try:
            layers.append(LayerSpec(kind=LAYER_KINDS[code], out_channels=out_channels, kernel=kernel,
                                    stride=stride, pad=pad, units=units, rate=float(np.float32(rate))))
        except ValidationError as e:
            raise CheckpointFormatError(f"Invalid layer {i}: {e.errors()[0]['msg']}", offset) from e
        offset += _LAYER.size

    try:
        config = ModelConfig(input_shape=(c, h, w), n_classes=n_classes, layers=layers)
        shapes = config.parameter_shapes()
    except ValidationError as e:
        raise CheckpointFormatError(f"Invalid model header: {e.errors()[0]['msg']}", 8) from e
    except ShapeError as e:
        raise CheckpointFormatError(f"Layer table does not describe a valid model: {e}", _HEADER.size) from e

    params: Parameters = {}
    for key, shape in shapes.items():
        size = int(np.prod(shape)) * 4
        if offset + size > end:
            raise CheckpointFormatError(f"Truncated array {key}", offset)
        params[key] = np.frombuffer(data, dtype='<f4', count=size // 4, offset=offset).reshape(shape).astype(np.float32)
        offset += size

    if offset != end:
        raise CheckpointFormatError(f"{end - offset} unexpected bytes before checksum", offset)
    return config, params


def load_checkpoint(path: Union[str, Path]) -> Tuple[ModelConfig, Parameters]:
    """
    Read a checkpoint.

    Raises:
        CheckpointFormatError: wrong magic/version, bad checksum, truncation or
            a layer table that does not describe a valid model
        OSError: file cannot be read
    """
    config, params = decode_checkpoint(Path(path).read_bytes())
    logger.debug(f"Loaded checkpoint {path}")
    return config, params
