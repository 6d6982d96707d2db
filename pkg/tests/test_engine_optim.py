import numpy as np
import pytest

from prune_audit.data.dataset import Dataset
from prune_audit.engine import (
    FullyConnected,
    NetworkSpec,
    NetworkState,
    TrainConfig,
    evaluate_loss,
    init_state,
    init_velocity,
    lr_at,
    sgd_step,
    train,
)
from prune_audit.engine.checkpoint import save_checkpoint

from conftest import all_kinds_spec


def _scalar_state(value: float) -> NetworkState:
    spec = NetworkSpec(input_shape=(1,), layers=(FullyConnected(1),))
    return NetworkState(
        spec=spec,
        params=((np.array([[value]]), np.zeros(1)),),
        rng_seed=0,
    )


def _step(state, grad, lr, momentum, weight_decay, velocity=None):
    velocity = velocity if velocity is not None else init_velocity(state)
    grads = ((np.array([[grad]]), np.zeros(1)),)
    return sgd_step(state, grads, velocity, lr, momentum, weight_decay), velocity


def test_plain_sgd_step():
    state, _ = _step(_scalar_state(1.0), grad=0.5, lr=0.1, momentum=0.0, weight_decay=0.0)
    assert state.params[0][0][0, 0] == pytest.approx(0.95)


def test_momentum_two_identical_steps():
    # second velocity = 0.9 g + g = 1.9 g
    g = 0.5
    state = _scalar_state(0.0)
    velocity = init_velocity(state)
    state, _ = _step(state, g, lr=1.0, momentum=0.9, weight_decay=0.0, velocity=velocity)
    before = state.params[0][0][0, 0]
    state, _ = _step(state, g, lr=1.0, momentum=0.9, weight_decay=0.0, velocity=velocity)
    assert before - state.params[0][0][0, 0] == pytest.approx(1.9 * g)


def test_weight_decay_only():
    state, _ = _step(_scalar_state(1.0), grad=0.0, lr=1e-2, momentum=0.0, weight_decay=1e-4)
    assert state.params[0][0][0, 0] == pytest.approx(1 - 1e-6)


def test_lr_at_multistep_schedule():
    schedule = ((0, 1e-2), (20, 1e-3))
    assert lr_at(schedule, 0) == 1e-2
    assert lr_at(schedule, 19) == 1e-2
    assert lr_at(schedule, 20) == 1e-3
    assert lr_at(schedule, 300) == 1e-3


def test_lr_at_single_entry_and_empty():
    assert lr_at(((0, 0.5),), 7) == 0.5
    with pytest.raises(ValueError):
        lr_at((), 0)
    with pytest.raises(ValueError):
        lr_at(((0, 0.5),), -1)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(-1, 8, 0.9, 0.0, ((0, 1e-2),))
    with pytest.raises(ValueError):
        TrainConfig(1, 8, 0.9, 0.0, ())
    with pytest.raises(ValueError):
        TrainConfig(1, 8, 0.9, 0.0, ((1, 1e-2),))           # must start at 0
    with pytest.raises(ValueError):
        TrainConfig(1, 8, 0.9, 0.0, ((0, 1e-2), (0, 1e-3)))  # strictly increasing
    with pytest.raises(ValueError):
        TrainConfig(1, 8, 0.9, 0.0, ((0, 0.0),))              # positive rates


def _toy_separable(n=60, seed=0):
    """Two linearly separable classes in the plane."""
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(loc=(-2.0, -2.0), scale=0.3, size=(half, 2))
    b = rng.normal(loc=(2.0, 2.0), scale=0.3, size=(n - half, 2))
    images = np.concatenate([a, b]).astype(np.float32).reshape(n, 1, 1, 2)
    labels = np.array([0] * half + [1] * (n - half))
    order = rng.permutation(n)
    return Dataset(images=images[order], labels=labels[order], name="toy")


def _toy_net():
    from prune_audit.engine import Flatten

    spec = NetworkSpec(input_shape=(1, 1, 2), layers=(Flatten(), FullyConnected(2)))
    return init_state(spec, seed=1)


def test_loss_drops_below_point_one_in_200_steps():
    ds = _toy_separable()
    # 200 steps = 20 epochs x 10 batches of 6
    config = TrainConfig(20, 6, 0.9, 0.0, ((0, 0.5),))
    steps = []
    state, _ = train(_toy_net(), ds, config, seed=0,
                     on_step=lambda s, l: steps.append(s))
    assert steps[-1] == 200
    assert evaluate_loss(state, ds) < 0.1


def test_training_is_bit_deterministic(tmp_path, small_train_test):
    config = TrainConfig(1, 64, 0.9, 1e-4, ((0, 0.01),))
    blobs = []
    for run in range(2):
        state = init_state(all_kinds_spec(input_shape=(1, 28, 28), classes=10), seed=5)
        state, _ = train(state, small_train_test.train, config, seed=42)
        path = tmp_path / f"run{run}.ckpt"
        save_checkpoint(state, path)
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_divergence_aborts_with_diagnostic(small_train_test):
    from prune_audit.engine import EngineError

    config = TrainConfig(3, 16, 0.99, 0.0, ((0, 1e4),))  # guaranteed blow-up
    state = init_state(all_kinds_spec(input_shape=(1, 28, 28), classes=10), seed=0)
    with np.errstate(all="ignore"), pytest.raises(EngineError,
                                                  match="diverged|non-finite"):
        train(state, small_train_test.train, config, seed=0)
