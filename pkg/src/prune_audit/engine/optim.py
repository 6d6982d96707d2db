"""SGD with momentum and weight decay, plus the multi-step LR schedule."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .network import NetworkState


@dataclass(frozen=True)
class TrainConfig:
    """One training stage: epochs, batching, solver and LR milestones.

    ``lr_schedule`` is an ordered list of ``(start_epoch, rate)`` pairs;
    the rate of the last milestone at or before the current epoch applies.
    """

    epochs: int
    batch_size: int
    momentum: float
    weight_decay: float
    lr_schedule: tuple[tuple[int, float], ...]

    def __post_init__(self):
        # epochs == 0 is allowed as an explicit no-op stage (evaluate only)
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        sched = tuple((int(e), float(r)) for e, r in self.lr_schedule)
        if not sched:
            raise ValueError("lr_schedule must not be empty")
        if sched[0][0] != 0:
            raise ValueError("first lr milestone must start at epoch 0")
        starts = [e for e, _ in sched]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError(f"lr milestones must be strictly increasing: {starts}")
        if any(r <= 0 for _, r in sched):
            raise ValueError("learning rates must be positive")
        object.__setattr__(self, "lr_schedule", sched)


def lr_at(schedule, epoch: int) -> float:
    """Rate of the last milestone whose start epoch is <= ``epoch``."""
    if not schedule:
        raise ValueError("empty learning-rate schedule")
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    rate = None
    for start, r in schedule:
        if start <= epoch:
            rate = r
    if rate is None:
        # schedule starts after `epoch`; fall back to the first milestone
        rate = schedule[0][1]
    return float(rate)


def init_velocity(state: NetworkState):
    return [
        (np.zeros_like(w), np.zeros_like(b)) for w, b in state.params
    ]


def sgd_step(state: NetworkState, grads, velocity, lr: float,
             momentum: float, weight_decay: float) -> NetworkState:
    """One SGD update: v <- m*v + g + wd*w ; w <- w - lr*v.

    ``velocity`` is updated in place; a new state is returned.
    """
    new_params = []
    for (w, b), (gw, gb), (vw, vb) in zip(state.params, grads, velocity):
        vw *= momentum
        vw += gw + weight_decay * w
        vb *= momentum
        vb += gb + weight_decay * b
        new_params.append((w - lr * vw, b - lr * vb))
    return replace(state, params=tuple(new_params))
