"""Network construction, shape inference, forward and backward passes.

A :class:`NetworkSpec` is an immutable architecture description; a
:class:`NetworkState` pairs it with concrete parameter arrays.  States are
treated as immutable snapshots: every update produces a new state, so they
can be shipped to worker processes without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .layers import (
    Conv2d,
    EngineError,
    Flatten,
    FullyConnected,
    LayerSpec,
    MaxPool2d,
    ReLU,
    ShapeMismatchError,
    conv2d_backward,
    conv2d_forward,
    fc_backward,
    fc_forward,
    flatten_backward,
    flatten_forward,
    maxpool2d_backward,
    maxpool2d_forward,
    relu_backward,
    relu_forward,
)
from .loss import cross_entropy_grad


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: input shape ``(channels, height, width)`` plus layers."""

    input_shape: tuple[int, int, int]
    layers: tuple[LayerSpec, ...]


@dataclass(frozen=True)
class NetworkState:
    """A spec plus its parameters: one ``(weight, bias)`` pair per

    parameterized layer, ordered as in :func:`parameterized_indices`.
    """

    spec: NetworkSpec
    params: tuple[tuple[np.ndarray, np.ndarray], ...]
    rng_seed: int


def parameterized_indices(spec: NetworkSpec) -> list[int]:
    """Positions of layers that carry weights (Conv2d / FullyConnected)."""
    return [
        i for i, layer in enumerate(spec.layers)
        if isinstance(layer, (Conv2d, FullyConnected))
    ]


def infer_shapes(spec: NetworkSpec) -> list[tuple[int, ...]]:
    """Per-layer output shapes (excluding the batch axis).

    Raises :class:`ShapeMismatchError` naming the first offending layer.
    """
    shape: tuple[int, ...] = spec.input_shape
    out = []
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv2d):
            if len(shape) != 3:
                raise ShapeMismatchError(i, f"Conv2d needs a CHW input, got {shape}")
            c, h, w = shape
            h2 = (h + 2 * layer.padding - layer.kernel_h) // layer.stride + 1
            w2 = (w + 2 * layer.padding - layer.kernel_w) // layer.stride + 1
            if h2 < 1 or w2 < 1:
                raise ShapeMismatchError(
                    i, f"kernel {layer.kernel_h}x{layer.kernel_w} exceeds "
                    f"feature map {h}x{w}"
                )
            shape = (layer.out_channels, h2, w2)
        elif isinstance(layer, MaxPool2d):
            if len(shape) != 3:
                raise ShapeMismatchError(i, f"MaxPool2d needs a CHW input, got {shape}")
            c, h, w = shape
            if h < layer.size or w < layer.size:
                raise ShapeMismatchError(
                    i, f"pool size {layer.size} exceeds feature map {h}x{w}"
                )
            shape = (c, h // layer.size, w // layer.size)
        elif isinstance(layer, ReLU):
            pass
        elif isinstance(layer, Flatten):
            shape = (int(np.prod(shape)),)
        elif isinstance(layer, FullyConnected):
            if len(shape) != 1:
                raise ShapeMismatchError(
                    i, f"FullyConnected needs a flat input, got {shape}"
                )
            shape = (layer.out_features,)
        else:
            raise ShapeMismatchError(i, f"unknown layer kind {layer!r}")
        out.append(shape)
    return out


def param_shapes(spec: NetworkSpec) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """(weight shape, bias shape) for each parameterized layer."""
    shapes = infer_shapes(spec)
    result = []
    current = spec.input_shape
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv2d):
            in_c = current[0]
            result.append((
                (layer.out_channels, in_c, layer.kernel_h, layer.kernel_w),
                (layer.out_channels,),
            ))
        elif isinstance(layer, FullyConnected):
            result.append(((layer.out_features, current[0]), (layer.out_features,)))
        current = shapes[i]
    return result


def param_count(spec: NetworkSpec) -> int:
    """Exact number of trainable scalars (weights plus biases)."""
    return sum(
        int(np.prod(w)) + int(np.prod(b)) for w, b in param_shapes(spec)
    )


def init_state(spec: NetworkSpec, seed: int, dtype=np.float32) -> NetworkState:
    """Kaiming-uniform fan-in weights (bound sqrt(6/fan_in)), zero biases.

    Drawing order is fixed (layer order, weights only), so a seed fully
    determines the parameters.
    """
    rng = np.random.default_rng(seed)
    params = []
    for w_shape, b_shape in param_shapes(spec):
        fan_in = int(np.prod(w_shape[1:]))
        bound = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=w_shape).astype(dtype)
        b = np.zeros(b_shape, dtype=dtype)
        params.append((w, b))
    return NetworkState(spec=spec, params=tuple(params), rng_seed=seed)


def cast_state(state: NetworkState, dtype) -> NetworkState:
    """Copy of the state with all parameters in ``dtype`` (gradient checks

    run the engine in float64 through this).
    """
    params = tuple((w.astype(dtype), b.astype(dtype)) for w, b in state.params)
    return replace(state, params=params)


def _check_batch(state: NetworkState, batch) -> np.ndarray:
    batch = np.asarray(batch)
    expected = state.spec.input_shape
    if batch.ndim != len(expected) + 1 or batch.shape[1:] != expected:
        raise ShapeMismatchError(
            0, f"batch shape {batch.shape} does not match input shape (N, "
            + ", ".join(str(d) for d in expected) + ")"
        )
    return batch


def forward_with_caches(state: NetworkState, batch):
    """Run the network, keeping per-layer caches for the backward pass."""
    x = _check_batch(state, batch)
    caches = []
    p = 0
    for i, layer in enumerate(state.spec.layers):
        try:
            if isinstance(layer, Conv2d):
                w, b = state.params[p]
                p += 1
                x, cache = conv2d_forward(x, w, b, layer.stride, layer.padding)
            elif isinstance(layer, MaxPool2d):
                x, cache = maxpool2d_forward(x, layer.size)
            elif isinstance(layer, ReLU):
                x, cache = relu_forward(x)
            elif isinstance(layer, Flatten):
                x, cache = flatten_forward(x)
            else:
                w, b = state.params[p]
                p += 1
                if x.shape[1] != w.shape[1]:
                    raise ShapeMismatchError(
                        i, f"FC expects {w.shape[1]} features, got {x.shape[1]}"
                    )
                x, cache = fc_forward(x, w, b)
        except ValueError as exc:
            raise ShapeMismatchError(i, str(exc)) from exc
        caches.append(cache)
    return x, caches


def forward(state: NetworkState, batch) -> np.ndarray:
    """Logits for a batch; pure function of ``(state, batch)``."""
    logits, _ = forward_with_caches(state, batch)
    return logits


def backward(state: NetworkState, batch, labels):
    """Gradients of the mean cross-entropy w.r.t. every parameter.

    Returns one ``(dw, db)`` pair per parameterized layer, with shapes
    identical to the parameters.
    """
    logits, caches = forward_with_caches(state, batch)
    d = cross_entropy_grad(logits, labels)
    return backward_from_caches(state.spec, caches, d)


def backward_from_caches(spec: NetworkSpec, caches, dlogits):
    """Backward walk given the caches of a completed forward pass."""
    d = dlogits
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for i in range(len(spec.layers) - 1, -1, -1):
        layer, cache = spec.layers[i], caches[i]
        if isinstance(layer, Conv2d):
            d, dw, db = conv2d_backward(d, cache, need_dx=i > 0)
            grads.append((dw, db))
        elif isinstance(layer, MaxPool2d):
            d = maxpool2d_backward(d, cache)
        elif isinstance(layer, ReLU):
            d = relu_backward(d, cache)
        elif isinstance(layer, Flatten):
            d = flatten_backward(d, cache)
        else:
            d, dw, db = fc_backward(d, cache, need_dx=i > 0)
            grads.append((dw, db))
    grads.reverse()
    return grads


def assert_finite(state: NetworkState, context: str = "") -> None:
    """Raise :class:`EngineError` if any parameter is NaN/Inf."""
    for k, (w, b) in enumerate(state.params):
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise EngineError(
                f"non-finite parameters in layer {k}"
                + (f" ({context})" if context else "")
            )
