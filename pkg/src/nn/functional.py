"""
Dense tensor layer operations, forward and backward.

Tensors are numpy arrays in row-major (C order) layout. Spatial operations
take a batch (B x C x H x W) or a single item (C x H x W); single items
come back without the batch axis. Backward functions always work on
batches.
"""

from typing import Optional, Tuple

import numpy as np

from utils import DomainError, ShapeError

PROB_FLOOR = 1e-12


def _batched(x: np.ndarray, ndim: int) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x)
    if x.ndim == ndim - 1:
        return x[None], True
    if x.ndim != ndim:
        raise ShapeError(f"Expected a {ndim - 1}-D item or {ndim}-D batch, got shape {x.shape}")
    return x, False


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    span = size + 2 * pad - kernel
    if stride < 1 or span < 0 or span % stride != 0:
        raise ShapeError(
            f"Convolution of size {size} with kernel {kernel}, stride {stride}, pad {pad} "
            "has no integral output size"
        )
    return span // stride + 1


def _window(xp: np.ndarray, i: int, j: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    return xp[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride]


def im2col(xp: np.ndarray, kernel: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """(B, C, Hp, Wp) padded input -> (B*out_h*out_w, C*k*k) patch matrix."""
    n, c = xp.shape[:2]
    col = np.empty((n, c, kernel, kernel, out_h, out_w), dtype=xp.dtype)
    for i in range(kernel):
        for j in range(kernel):
            col[:, :, i, j] = _window(xp, i, j, stride, out_h, out_w)
    return col.transpose(0, 4, 5, 1, 2, 3).reshape(n * out_h * out_w, -1)


def conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray,
           stride: int = 1, pad: int = 0, method: str = 'direct') -> np.ndarray:
    """
    Zero-padded 2-D cross-correlation.

    out[o, y, x] = bias[o] + sum over (c, i, j) of input[c, y*s+i, x*s+j] * w[o, c, i, j]

    ``method='direct'`` sums window offsets one at a time; ``'im2col'``
    builds the patch matrix and does one matrix product.
    """
    xb, single = _batched(x, 4)
    c_out, c_in, kh, kw = weights.shape
    if kh != kw:
        raise ShapeError(f"Only square kernels are supported, got {kh}x{kw}")
    if xb.shape[1] != c_in or bias.shape != (c_out,):
        raise ShapeError(f"Input {xb.shape}, weights {weights.shape} and bias {bias.shape} do not match")
    n, _, h, w = xb.shape
    out_h = conv_output_size(h, kh, stride, pad)
    out_w = conv_output_size(w, kw, stride, pad)
    xp = np.pad(xb, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else xb

    if method == 'direct':
        out = np.zeros((n, c_out, out_h, out_w), dtype=np.result_type(xb, weights))
        for i in range(kh):
            for j in range(kw):
                patch = _window(xp, i, j, stride, out_h, out_w)
                out += np.tensordot(patch, weights[:, :, i, j], axes=([1], [1])).transpose(0, 3, 1, 2)
    elif method == 'im2col':
        cols = im2col(xp, kh, stride, out_h, out_w)
        out = (cols @ weights.reshape(c_out, -1).T).reshape(n, out_h, out_w, c_out).transpose(0, 3, 1, 2)
    else:
        raise DomainError(f"Unknown convolution method {method!r}")
    out = out + bias[None, :, None, None]
    return out[0] if single else out


def conv2d_backward(dout: np.ndarray, x: np.ndarray, weights: np.ndarray,
                    stride: int = 1, pad: int = 0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dweights, dbias) of a batched conv2d."""
    kh = weights.shape[2]
    out_h, out_w = dout.shape[2:]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    dxp = np.zeros(xp.shape, dtype=np.result_type(dout, weights))
    dw = np.zeros(weights.shape, dtype=np.result_type(dout, x))
    for i in range(kh):
        for j in range(kh):
            patch = _window(xp, i, j, stride, out_h, out_w)
            dw[:, :, i, j] = np.tensordot(dout, patch, axes=([0, 2, 3], [0, 2, 3]))
            contrib = np.tensordot(dout, weights[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
            dxp[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += contrib
    db = dout.sum(axis=(0, 2, 3))
    dx = dxp[:, :, pad:pad + x.shape[2], pad:pad + x.shape[3]] if pad else dxp
    return dx, dw, db


def maxpool2x2(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    2x2 max pooling with stride 2.

    Returns the pooled tensor and, per output cell, the winning position
    0..3 in row-major window order (ties go to the first).
    """
    xb, single = _batched(x, 4)
    n, c, h, w = xb.shape
    if h % 2 or w % 2:
        raise ShapeError(f"2x2 pooling needs even height and width, got {h}x{w}")
    windows = xb.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    if single:
        return out[0], argmax[0]
    return out, argmax


def maxpool2x2_backward(dout: np.ndarray, argmax: np.ndarray) -> np.ndarray:
    n, c, h2, w2 = dout.shape
    windows = np.zeros((n, c, h2, w2, 4), dtype=dout.dtype)
    np.put_along_axis(windows, argmax[..., None], dout[..., None], axis=-1)
    return windows.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2 * 2, w2 * 2)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dout * (x > 0)


def dropout(x: np.ndarray, rate: float, mode: str = 'train',
            rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Inverted dropout.

    Eval mode is the identity. Train mode zeroes each element with
    probability ``rate`` and scales survivors by 1/(1 - rate); the scaled
    mask is returned for the backward pass.
    """
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"Dropout rate must lie in [0, 1), got {rate}")
    if mode == 'eval' or rate == 0.0:
        return x, None
    if mode != 'train':
        raise DomainError(f"Unknown mode {mode!r}")
    if rng is None:
        raise DomainError("Train-mode dropout needs a random stream")
    x = np.asarray(x)
    mask = ((rng.random(x.shape) >= rate) / (1.0 - rate)).astype(np.result_type(x, np.float32))
    return x * mask, mask


def dropout_backward(dout: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    return dout if mask is None else dout * mask


def fully_connected(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """out = weights . x + bias, for a vector or a batch of row vectors."""
    x = np.asarray(x)
    m, n = weights.shape
    if x.shape[-1] != n or bias.shape != (m,) or x.ndim not in (1, 2):
        raise ShapeError(f"Input {x.shape}, weights {weights.shape} and bias {bias.shape} do not match")
    return x @ weights.T + bias


def fully_connected_backward(dout: np.ndarray, x: np.ndarray,
                             weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return dout @ weights, dout.T @ x, dout.sum(axis=0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, with the row maximum subtracted first."""
    logits = np.asarray(logits)
    if logits.shape[-1] < 2:
        raise ShapeError(f"Softmax needs at least two classes, got shape {logits.shape}")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, true_class) -> float:
    """
    -ln(probs[true_class]) with the probability floored at 1e-12.

    For a batch of distributions and an array of classes, the batch mean.
    """
    probs = np.asarray(probs)
    if probs.ndim == 1:
        if not 0 <= int(true_class) < probs.shape[0]:
            raise DomainError(f"Class {true_class} out of range for {probs.shape[0]} classes")
        return float(-np.log(max(probs[int(true_class)], PROB_FLOOR)))
    classes = np.asarray(true_class, dtype=np.int64)
    if classes.shape != probs.shape[:1] or classes.min() < 0 or classes.max() >= probs.shape[1]:
        raise DomainError(f"Classes {classes.shape} do not fit probabilities {probs.shape}")
    picked = probs[np.arange(len(classes)), classes]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())
