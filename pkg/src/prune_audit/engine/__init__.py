"""Minimal deterministic training engine: numpy arrays are the tensor

carrier (row-major storage, float32 by default with float64 accumulation
in reductions), layers are plain dataclasses, and every operation is a
pure function so states can be snapshotted and shipped between workers.
"""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .layers import (
    Conv2d,
    EngineError,
    Flatten,
    FullyConnected,
    LayerSpec,
    MaxPool2d,
    ReLU,
    ShapeMismatchError,
)
from .loss import cross_entropy_grad, cross_entropy_loss, softmax
from .network import (
    NetworkSpec,
    NetworkState,
    backward,
    cast_state,
    forward,
    infer_shapes,
    init_state,
    param_count,
    param_shapes,
    parameterized_indices,
)
from .optim import TrainConfig, init_velocity, lr_at, sgd_step
from .train import EpochLog, evaluate, evaluate_loss, train

__all__ = [
    "CheckpointError",
    "Conv2d",
    "EngineError",
    "EpochLog",
    "Flatten",
    "FullyConnected",
    "LayerSpec",
    "MaxPool2d",
    "NetworkSpec",
    "NetworkState",
    "ReLU",
    "ShapeMismatchError",
    "TrainConfig",
    "backward",
    "cast_state",
    "cross_entropy_grad",
    "cross_entropy_loss",
    "evaluate",
    "evaluate_loss",
    "forward",
    "infer_shapes",
    "init_state",
    "init_velocity",
    "load_checkpoint",
    "lr_at",
    "param_count",
    "param_shapes",
    "parameterized_indices",
    "save_checkpoint",
    "sgd_step",
    "softmax",
    "train",
]
