import os
from pathlib import Path

import numpy as np
import pytest

from prune_audit.data.dataset import SplitPair, standardize, subset
from prune_audit.data.synth import ensure_synth_split
from prune_audit.engine import (
    Conv2d,
    Flatten,
    FullyConnected,
    MaxPool2d,
    NetworkSpec,
    ReLU,
    init_state,
)

FIXTURE_DIR = Path(__file__).parent / "data"

# cached across test sessions so repeated runs do not regenerate the corpus
DATA_CACHE = Path(
    os.environ.get("PRUNE_AUDIT_TEST_CACHE", Path(__file__).parent / ".cache")
)


@pytest.fixture(scope="session")
def synth_split() -> SplitPair:
    return ensure_synth_split(DATA_CACHE / "data")


@pytest.fixture(scope="session")
def small_train_test(synth_split):
    """1k standardized training images plus the test set (synth corpus)."""
    train = subset(synth_split.train, 1000, seed=0)
    train, stats = standardize(train)
    test, _ = standardize(subset(synth_split.test, 1000, seed=0), stats)
    return SplitPair(train=train, test=test)


def all_kinds_spec(input_shape=(2, 8, 8), classes=3) -> NetworkSpec:
    """A small network touching every layer kind."""
    return NetworkSpec(
        input_shape=input_shape,
        layers=(
            Conv2d(3, 3, 3, stride=1, padding=1), ReLU(), MaxPool2d(2),
            Conv2d(4, 2, 2), ReLU(), Flatten(),
            FullyConnected(6), ReLU(), FullyConnected(classes),
        ),
    )


def random_batch(spec: NetworkSpec, n: int, seed: int):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, *spec.input_shape))
    num_classes = spec.layers[-1].out_features
    y = rng.integers(0, num_classes, size=n)
    return x, y


def tiny_state(seed: int = 0, dtype=np.float32):
    return init_state(all_kinds_spec(), seed=seed, dtype=dtype)
