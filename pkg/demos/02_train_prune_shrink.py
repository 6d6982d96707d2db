"""Build the small classifier, train it briefly, and shrink it.

Walks the core mechanics: the W-D variant family, exhaustive combination
enumeration, physical filter removal (and its equivalence with masking),
the pruned train loss, and argmin selection.

Run:  python demos/02_train_prune_shrink.py
"""

import numpy as np

from prune_audit.data import ensure_synth_split, standardize, subset
from prune_audit.engine import TrainConfig, evaluate, forward, init_state, param_count, train
from prune_audit.pruning import (
    PruningPlan,
    apply_combination,
    enumerate_combinations,
    oracle_select,
    pruned_train_loss,
    prunable_widths,
)
from prune_audit.zoo import build_lenet5_mini, parse_variant


def main():
    for name in ("W10D5", "W20D5", "W10D7"):
        spec = build_lenet5_mini(parse_variant(name))
        print(f"{name}: {param_count(spec):6d} parameters")

    split = ensure_synth_split("demo-data")
    train_ds = subset(split.train, 4000, seed=1)
    train_ds, stats = standardize(train_ds)
    test_ds, _ = standardize(split.test, stats)

    spec = build_lenet5_mini()
    state = init_state(spec, seed=1)
    config = TrainConfig(epochs=3, batch_size=8, momentum=0.9, weight_decay=1e-4,
                         lr_schedule=((0, 0.003), (2, 0.001)))
    state, logs = train(state, train_ds, config, seed=1)
    test_loss, test_acc = evaluate(state, test_ds)
    print(f"\ntrained 3 epochs: train loss {logs[-1].train_loss:.3f}, "
          f"test accuracy {test_acc:.1f}%")

    plan = PruningPlan(layer_ratios=(0.0, 0.2, 0.0))      # 2 of 10 conv2 filters
    combos = enumerate_combinations(prunable_widths(state), plan)
    print(f"\nremoving 2/10 filters of the middle conv layer: "
          f"{len(combos)} combinations")

    shrunk = apply_combination(state, combos[0])
    print(f"first combination {combos[0].encode()}: "
          f"{param_count(state.spec)} -> {param_count(shrunk.spec)} parameters")

    # independent check: zero those two filters in the original instead
    from dataclasses import replace
    w2, b2 = state.params[1]
    w2, b2 = w2.copy(), b2.copy()
    w2[[0, 1]] = 0.0
    b2[[0, 1]] = 0.0
    masked = replace(state, params=(state.params[0], (w2, b2)) + state.params[2:])
    x = np.random.default_rng(0).normal(size=(4, 1, 28, 28)).astype(np.float32)
    print("shrunk net logits match the masked original:",
          np.allclose(forward(shrunk, x), forward(masked, x), atol=1e-5))

    losses = [pruned_train_loss(apply_combination(state, c), train_ds) for c in combos]
    pick = oracle_select(combos, losses)
    print(f"\npruned train loss range: [{min(losses):.3f}, {max(losses):.3f}]")
    print(f"argmin-loss combination: {pick.encode()} "
          f"(loss {min(losses):.3f}, dense was {logs[-1].train_loss:.3f})")


if __name__ == "__main__":
    main()
