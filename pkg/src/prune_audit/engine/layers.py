"""Layer descriptions and their forward/backward kernels.

Every kernel is a pure function on numpy arrays.  Batches are NCHW
(``N x channels x height x width``) until a ``Flatten``, then ``N x features``.
Kernels run in the dtype of their inputs, so the same code serves the
float32 training path and the float64 path used by gradient checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class EngineError(Exception):
    """Base class for engine failures."""


class ShapeMismatchError(EngineError):
    """Input incompatible with a layer; carries the offending layer index."""

    def __init__(self, layer_index: int, message: str):
        self.layer_index = layer_index
        super().__init__(f"layer {layer_index}: {message}")


@dataclass(frozen=True)
class Conv2d:
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if min(self.out_channels, self.kernel_h, self.kernel_w, self.stride) < 1:
            raise ValueError(f"Conv2d sizes must be positive, got {self}")
        if self.padding < 0:
            raise ValueError(f"Conv2d padding must be >= 0, got {self.padding}")


@dataclass(frozen=True)
class MaxPool2d:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"MaxPool2d size must be positive, got {self.size}")


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class FullyConnected:
    out_features: int

    def __post_init__(self):
        if self.out_features < 1:
            raise ValueError(f"FullyConnected out_features must be positive, got {self}")


LayerSpec = Union[Conv2d, MaxPool2d, ReLU, Flatten, FullyConnected]


def conv2d_forward(x, w, b, stride: int, padding: int):
    """Cross-correlation of ``x (N,C,H,W)`` with ``w (O,C,kh,kw)`` plus bias.

    Returns ``(y, cache)`` where the cache holds what the backward pass needs.
    """
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    kh, kw = w.shape[2], w.shape[3]
    # windows: (N, C, Ho, Wo, kh, kw); materialized so both gemms reuse it
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    win = np.ascontiguousarray(win)
    y = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))     # (N, Ho, Wo, O)
    y = np.moveaxis(y, 3, 1) + b[None, :, None, None]
    return np.ascontiguousarray(y), (x.shape, win, w, stride, padding)


def conv2d_backward(dy, cache, need_dx: bool = True):
    """Gradients of a conv layer: returns ``(dx, dw, db)``.

    ``need_dx=False`` (first layer of a network) skips the input gradient,
    which is the most expensive part.
    """
    x_shape, win, w, stride, padding = cache
    kh, kw = w.shape[2], w.shape[3]
    n, _, h_out, w_out = dy.shape

    db = dy.sum(axis=(0, 2, 3))
    dw = np.tensordot(dy, win, axes=([0, 2, 3], [0, 2, 3]))   # (O, C, kh, kw)

    if not need_dx:
        return None, dw, db
    if stride == 1:
        # dx is the full correlation of dy with the flipped kernel.
        dyp = np.pad(dy, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        dywin = sliding_window_view(dyp, (kh, kw), axis=(2, 3))
        w_rot = np.ascontiguousarray(w[:, :, ::-1, ::-1])
        dx = np.tensordot(dywin, w_rot, axes=([1, 4, 5], [0, 2, 3]))
        dx = np.moveaxis(dx, 3, 1)
    else:
        # One gemm for dy @ w, then scatter per kernel offset.
        dcol = np.tensordot(dy, w, axes=([1], [0]))           # (N,Ho,Wo,C,kh,kw)
        dx = np.zeros(x_shape, dtype=dy.dtype)
        for u in range(kh):
            for v in range(kw):
                dx[:, :, u:u + stride * h_out:stride,
                   v:v + stride * w_out:stride] += np.moveaxis(dcol[..., u, v], 3, 1)
    if padding:
        dx = dx[:, :, padding:-padding, padding:-padding]
    return np.ascontiguousarray(dx), dw, db


def maxpool2d_forward(x, size: int):
    """Non-overlapping max pooling; trailing rows/cols that do not fill a

    window are dropped.  Ties within a window route the gradient to the
    first (row-major) maximal entry, which keeps the backward pass
    deterministic.
    """
    n, c, h, w = x.shape
    ho, wo = h // size, w // size
    x = x[:, :, :ho * size, :wo * size]
    win = x.reshape(n, c, ho, size, wo, size).transpose(0, 1, 2, 4, 3, 5)
    win = win.reshape(n, c, ho, wo, size * size)
    idx = win.argmax(axis=-1)
    y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return y, ((n, c, h, w), size, idx)


def maxpool2d_backward(dy, cache):
    (n, c, h, w), size, idx = cache
    ho, wo = h // size, w // size
    dwin = np.zeros((n, c, ho, wo, size * size), dtype=dy.dtype)
    np.put_along_axis(dwin, idx[..., None], dy[..., None], axis=-1)
    dx = np.zeros((n, c, h, w), dtype=dy.dtype)
    dx[:, :, :ho * size, :wo * size] = (
        dwin.reshape(n, c, ho, wo, size, size).transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho * size, wo * size)
    )
    return dx


def relu_forward(x):
    return np.maximum(x, 0), x > 0


def relu_backward(dy, mask):
    return dy * mask


def flatten_forward(x):
    return x.reshape(x.shape[0], -1), x.shape


def flatten_backward(dy, shape):
    return dy.reshape(shape)


def fc_forward(x, w, b):
    """Affine map ``x (N,F) @ w.T (F,O) + b``."""
    return x @ w.T + b, (x, w)


def fc_backward(dy, cache, need_dx: bool = True):
    x, w = cache
    dx = dy @ w if need_dx else None
    return dx, dy.T @ x, dy.sum(axis=0)
