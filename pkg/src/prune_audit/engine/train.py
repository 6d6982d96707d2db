"""Training loop and exact dataset-level evaluation.

Losses are accumulated in float64 and weighted by batch size, so the
reported value is the exact dataset mean and does not depend on the batch
size used for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.dataset import Dataset, batch_iter
from ..seeding import derive_seed
from .layers import EngineError
from .loss import cross_entropy_grad, cross_entropy_loss
from .network import (
    NetworkState,
    assert_finite,
    backward_from_caches,
    forward,
    forward_with_caches,
)
from .optim import TrainConfig, init_velocity, lr_at, sgd_step


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    lr: float
    train_loss: float          # running mean over the epoch's batches
    test_accuracy: float | None = None
    test_loss: float | None = None


def evaluate_loss(state: NetworkState, ds: Dataset, batch_size: int = 512) -> float:
    """Exact dataset-mean cross-entropy; no parameters are touched."""
    total = 0.0
    for images, labels in batch_iter(ds, batch_size):
        logits = forward(state, images)
        total += cross_entropy_loss(logits, labels) * len(labels)
    return total / len(ds)


def evaluate(state: NetworkState, ds: Dataset, batch_size: int = 512):
    """Returns ``(dataset-mean loss, accuracy percent)``."""
    total = 0.0
    correct = 0
    for images, labels in batch_iter(ds, batch_size):
        logits = forward(state, images)
        total += cross_entropy_loss(logits, labels) * len(labels)
        correct += int((logits.argmax(axis=1) == labels).sum())
    return total / len(ds), 100.0 * correct / len(ds)


def train(state: NetworkState, ds: Dataset, config: TrainConfig, seed: int,
          test_ds: Dataset | None = None, on_step=None) -> tuple[NetworkState, list[EpochLog]]:
    """Run SGD for ``config.epochs`` epochs; deterministic for a fixed seed.

    ``on_step(step_index, batch_loss)`` fires after every parameter update;
    passing ``test_ds`` adds per-epoch test metrics to the log.  Divergence
    (non-finite batch loss) aborts with a diagnostic.
    """
    velocity = init_velocity(state)
    logs = []
    step = 0
    for epoch in range(config.epochs):
        lr = lr_at(config.lr_schedule, epoch)
        loss_sum = 0.0
        for images, labels in batch_iter(ds, config.batch_size,
                                         seed=derive_seed(seed, "epoch", epoch),
                                         shuffle=True):
            logits, caches = forward_with_caches(state, images)
            batch_loss = cross_entropy_loss(logits, labels)
            if not np.isfinite(batch_loss):
                raise EngineError(
                    f"diverged: loss={batch_loss} at epoch {epoch}, step {step} "
                    f"(lr={lr})"
                )
            grads = backward_from_caches(state.spec, caches,
                                         cross_entropy_grad(logits, labels))
            state = sgd_step(state, grads, velocity, lr,
                             config.momentum, config.weight_decay)
            loss_sum += batch_loss * len(labels)
            step += 1
            if on_step is not None:
                on_step(step, batch_loss)
        assert_finite(state, context=f"after epoch {epoch}")
        test_loss = test_acc = None
        if test_ds is not None:
            test_loss, test_acc = evaluate(state, test_ds)
        logs.append(EpochLog(epoch=epoch, lr=lr, train_loss=loss_sum / len(ds),
                             test_accuracy=test_acc, test_loss=test_loss))
    return state, logs
