import math

import numpy as np
import pytest

from prune_audit.engine import cross_entropy_grad, cross_entropy_loss


def test_uniform_logits_give_log_num_classes():
    logits = np.zeros((3, 10))
    assert cross_entropy_loss(logits, [0, 5, 9]) == pytest.approx(math.log(10))


def test_saturated_correct_class_gives_near_zero():
    logits = np.zeros((1, 10))
    logits[0, 0] = 1000.0
    assert cross_entropy_loss(logits, [0]) == pytest.approx(0.0, abs=1e-12)


def test_two_class_hand_computation():
    # -ln(e^2 / (e^1 + e^2)) = ln(1 + e^-1)
    logits = np.array([[1.0, 2.0]])
    assert cross_entropy_loss(logits, [1]) == pytest.approx(math.log(1 + math.exp(-1)))
    assert cross_entropy_loss(logits, [1]) == pytest.approx(0.313262, abs=1e-6)


def test_loss_is_batch_mean():
    logits = np.array([[1.0, 2.0], [1.0, 2.0]])
    single = cross_entropy_loss(logits[:1], [1])
    both = cross_entropy_loss(logits, [1, 0])
    other = cross_entropy_loss(logits[1:], [0])
    assert both == pytest.approx((single + other) / 2)


def test_label_out_of_range_raises():
    logits = np.zeros((2, 4))
    with pytest.raises(ValueError):
        cross_entropy_loss(logits, [0, 4])
    with pytest.raises(ValueError):
        cross_entropy_loss(logits, [-1, 0])


def test_row_count_mismatch_raises():
    with pytest.raises(ValueError):
        cross_entropy_loss(np.zeros((3, 4)), [0, 1])


def test_grad_matches_softmax_minus_onehot():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(5, 4))
    labels = rng.integers(0, 4, size=5)
    g = cross_entropy_grad(logits, labels)
    # finite-difference on each logit
    eps = 1e-6
    for i in range(5):
        for j in range(4):
            bumped = logits.copy()
            bumped[i, j] += eps
            fd = (cross_entropy_loss(bumped, labels) - cross_entropy_loss(logits, labels)) / eps
            assert g[i, j] == pytest.approx(fd, abs=1e-5)


def test_loss_overflow_safe_for_large_logits():
    logits = np.array([[10000.0, 0.0]])
    assert math.isfinite(cross_entropy_loss(logits, [1]))
    assert cross_entropy_loss(logits, [1]) == pytest.approx(10000.0)
