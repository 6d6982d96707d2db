"""The importance-criteria toolbox on a small MLP.

Compares the four unstructured strategies at the same global sparsity:
uniform magnitude (same fraction per layer), global magnitude (one
network-wide threshold), and the two non-uniform ratio assignments driven
by weight-outlier share and by PCA principal-component share.  Also shows
the structured per-filter scores (L1 and first-order gradient*weight) on a
conv net.

Run:  python demos/04_magnitude_criteria.py
"""

import numpy as np

from prune_audit.criteria import (
    assign_ratios_onp,
    assign_ratios_pnp,
    gmp_threshold,
    mask_from_ratios,
    mask_gmp,
    mask_ump,
    score_l1_filters,
    score_taylor1,
)
from prune_audit.data import ensure_synth_split, standardize
from prune_audit.engine import FullyConnected, NetworkSpec, init_state
from prune_audit.zoo import build_lenet5_mini

SPARSITY = 0.4375  # 7/16


def main():
    from dataclasses import replace

    spec = NetworkSpec(input_shape=(784,),
                       layers=(FullyConnected(128), FullyConnected(64),
                               FullyConnected(10)))
    state = init_state(spec, seed=0)
    # Gaussian weights with per-layer scales: heavier tails than the
    # uniform init, so the outlier criterion has something to see
    rng = np.random.default_rng(0)
    state = replace(state, params=tuple(
        (rng.normal(scale=s, size=w.shape).astype(np.float32), b)
        for (w, b), s in zip(state.params, (0.05, 0.1, 0.2))
    ))
    counts = [w.size for w, _ in state.params]
    print(f"MLP layers hold {counts} weights; global sparsity target {SPARSITY}\n")

    ump = mask_ump(state, SPARSITY)
    gmp = mask_gmp(state, SPARSITY)
    onp = assign_ratios_onp(state, SPARSITY)
    pnp = assign_ratios_pnp(state, SPARSITY)

    def row(name, per_layer, achieved):
        cells = " ".join(f"{v:6.3f}" for v in per_layer)
        print(f"{name:22s} per-layer [{cells}]  achieved {achieved:.4f}")

    row("uniform magnitude", ump.layer_sparsities(), ump.sparsity())
    row("global magnitude", gmp.layer_sparsities(), gmp.sparsity())
    row("outlier-driven", onp.ratios, onp.achieved_sparsity)
    row("pca-driven", pnp.ratios, pnp.achieved_sparsity)

    threshold = gmp_threshold(state, SPARSITY)
    print(f"\nglobal magnitude threshold: {threshold:.6f} "
          f"(k-th smallest |w| network-wide)")
    print("masks from the non-uniform assignments hit their targets too:",
          f"{mask_from_ratios(state, onp).sparsity():.4f},",
          f"{mask_from_ratios(state, pnp).sparsity():.4f}")

    # structured scores on the conv classifier
    split = ensure_synth_split("demo-data")
    train_ds, _ = standardize(split.train)
    conv_state = init_state(build_lenet5_mini(), seed=0)
    l1 = score_l1_filters(conv_state)
    taylor = score_taylor1(conv_state, train_ds.images[:256], train_ds.labels[:256])
    print("\nconv1 filter rankings (least important first):")
    print("  by L1 magnitude:       ", np.argsort(l1.layer(0)).tolist())
    print("  by |gradient * weight|:", np.argsort(taylor.layer(0)).tolist())


if __name__ == "__main__":
    main()
