"""Importance-based pruning criteria used as baselines for sweep audits.

Structured scores (per conv filter):

* L1 magnitude: sum of |w| over a filter's kernel (bias excluded).
* First-order saliency: |gradient * weight| summed per filter; the
  second-order curvature term is deliberately out of scope here.

Unstructured masks (per individual weight, biases untouched):

* UMP: each layer drops the same fraction of its smallest-|w| weights.
* GMP: one global |w| threshold across the whole network, so per-layer
  fractions come out non-uniform.

Non-uniform layer-ratio assignments:

* outlier-driven: layers with a higher share of outlier weights
  (|w| above mean + 3 std of the layer's magnitudes) are treated as more
  important and get lower ratios.
* pca-driven: layers whose weight matrix needs a larger fraction of its
  singular directions to cover 95% of squared spectral mass get lower
  ratios.

Both assignments map their layer statistic through a decreasing affine
function and then round to integer weight counts so the achieved global
sparsity hits the target within one weight.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .engine import Conv2d, NetworkState, backward, parameterized_indices

OUTLIER_SIGMAS = 3.0
PCA_ENERGY = 0.95
RATIO_CLAMP = 0.95


class CriteriaError(Exception):
    pass


@dataclass(frozen=True)
class ImportanceScores:
    """Non-negative score per prunable unit.

    ``mode`` is "filter" (one score per conv filter, keyed by conv
    ordinal) or "weight" (one score per weight, keyed by parameterized
    layer ordinal).
    """

    per_layer: tuple[tuple[int, np.ndarray], ...]
    mode: str

    def layer(self, layer_id: int) -> np.ndarray:
        for lid, scores in self.per_layer:
            if lid == layer_id:
                return scores
        raise KeyError(f"no scores for layer {layer_id}")


def _conv_param_ordinals(state: NetworkState):
    """(conv ordinal, param index) pairs for every conv layer."""
    out = []
    conv_ordinal = 0
    for param_idx, layer_pos in enumerate(parameterized_indices(state.spec)):
        if isinstance(state.spec.layers[layer_pos], Conv2d):
            out.append((conv_ordinal, param_idx))
            conv_ordinal += 1
    return out


def score_l1_filters(state: NetworkState) -> ImportanceScores:
    """Per-filter L1 norm of the kernel weights."""
    per_layer = []
    for ordinal, param_idx in _conv_param_ordinals(state):
        w, _ = state.params[param_idx]
        per_layer.append((ordinal, np.abs(w).sum(axis=(1, 2, 3))))
    return ImportanceScores(per_layer=tuple(per_layer), mode="filter")


def taylor_weight_scores(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    """First-order saliency per weight: |g * w|."""
    return np.abs(np.asarray(g) * np.asarray(w))


def score_taylor1(state: NetworkState, images, labels) -> ImportanceScores:
    """First-order saliency per conv filter, from one gradient evaluation

    on the given batch.
    """
    if len(images) == 0:
        raise CriteriaError("scoring batch must not be empty")
    grads = backward(state, images, labels)
    per_layer = []
    for ordinal, param_idx in _conv_param_ordinals(state):
        w, _ = state.params[param_idx]
        gw, _ = grads[param_idx]
        per_layer.append((ordinal, taylor_weight_scores(w, gw).sum(axis=(1, 2, 3))))
    return ImportanceScores(per_layer=tuple(per_layer), mode="filter")


@dataclass(frozen=True)
class UnstructuredMask:
    """Boolean keep-mask per parameterized layer's weight array."""

    layers: tuple[np.ndarray, ...]

    def sparsity(self) -> float:
        zeros = sum(int((~m).sum()) for m in self.layers)
        total = sum(m.size for m in self.layers)
        return zeros / total

    def layer_sparsities(self) -> tuple[float, ...]:
        return tuple(float((~m).sum() / m.size) for m in self.layers)


def apply_mask(state: NetworkState, mask: UnstructuredMask) -> NetworkState:
    params = tuple(
        (w * m.astype(w.dtype), b)
        for (w, b), m in zip(state.params, mask.layers)
    )
    return replace(state, params=params)


def _check_sparsity(sparsity: float) -> float:
    if not 0.0 < sparsity < 1.0:
        raise CriteriaError(f"sparsity must lie in (0, 1), got {sparsity}")
    return float(sparsity)


def mask_ump(state: NetworkState, sparsity: float) -> UnstructuredMask:
    """Uniform magnitude mask: per layer, zero the floor(sparsity * count)

    smallest-|w| weights.
    """
    _check_sparsity(sparsity)
    masks = []
    for w, _ in state.params:
        k = int(np.floor(sparsity * w.size))
        keep = np.ones(w.size, dtype=bool)
        order = np.argsort(np.abs(w).ravel(), kind="stable")
        keep[order[:k]] = False
        masks.append(keep.reshape(w.shape))
    return UnstructuredMask(layers=tuple(masks))


def gmp_threshold(state: NetworkState, sparsity: float) -> float:
    """The largest magnitude zeroed by :func:`mask_gmp` (k-th smallest |w|)."""
    _check_sparsity(sparsity)
    magnitudes = np.concatenate([np.abs(w).ravel() for w, _ in state.params])
    k = int(np.floor(sparsity * magnitudes.size))
    if k == 0:
        return 0.0
    return float(np.partition(magnitudes, k - 1)[k - 1])


def mask_gmp(state: NetworkState, sparsity: float) -> UnstructuredMask:
    """Global magnitude mask: zero the floor(sparsity * total) smallest-|w|

    weights network-wide; per-layer fractions are generally non-uniform.
    """
    _check_sparsity(sparsity)
    magnitudes = np.concatenate([np.abs(w).ravel() for w, _ in state.params])
    k = int(np.floor(sparsity * magnitudes.size))
    drop = np.argsort(magnitudes, kind="stable")[:k]
    keep_flat = np.ones(magnitudes.size, dtype=bool)
    keep_flat[drop] = False
    masks = []
    offset = 0
    for w, _ in state.params:
        masks.append(keep_flat[offset:offset + w.size].reshape(w.shape))
        offset += w.size
    return UnstructuredMask(layers=tuple(masks))


@dataclass(frozen=True)
class LayerRatioAssignment:
    """Assigned per-layer ratios plus the integer removal counts they

    round to; ``achieved_sparsity`` is the post-rounding global result.
    """

    ratios: tuple[float, ...]
    removal_counts: tuple[int, ...]
    achieved_sparsity: float


def _affine_assignment(stat, counts, target: float) -> LayerRatioAssignment:
    """Map a per-layer statistic to ratios decreasing affinely in the

    statistic, with the count-weighted mean pinned to ``target``:

        r_i = target + slope * (mean_w(stat) - stat_i),
        slope = (target / 2) / (max(stat) - min(stat)).

    Ratios are clamped to [0, 0.95], converted to integer removal counts,
    and nudged by single weights until the global total is exact.
    """
    stat = np.asarray(stat, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    k_target = int(round(target * total))
    spread = float(stat.max() - stat.min())
    if spread == 0.0:
        ratios = np.full(len(stat), target)
    else:
        weighted_mean = float((stat * counts).sum() / total)
        slope = (target / 2.0) / spread
        ratios = target + slope * (weighted_mean - stat)
    ratios = np.clip(ratios, 0.0, RATIO_CLAMP)

    k = np.rint(ratios * counts).astype(np.int64)
    k_max = np.floor(RATIO_CLAMP * counts).astype(np.int64)
    k = np.minimum(k, k_max)
    # repair rounding drift one weight at a time, largest layers first
    order = np.argsort(-counts, kind="stable")
    while k.sum() != k_target:
        need = k_target - int(k.sum())
        step = 1 if need > 0 else -1
        for i in order:
            if step > 0 and k[i] < k_max[i]:
                k[i] += step
                break
            if step < 0 and k[i] > 0:
                k[i] += step
                break
        else:
            raise CriteriaError(
                f"cannot reach target sparsity {target} under the "
                f"{RATIO_CLAMP} per-layer clamp"
            )
    return LayerRatioAssignment(
        ratios=tuple(float(r) for r in ratios),
        removal_counts=tuple(int(ki) for ki in k),
        achieved_sparsity=float(k.sum() / total),
    )


def outlier_fractions(state: NetworkState, sigmas: float = OUTLIER_SIGMAS):
    """Per layer: share of weights with |w| above mean + sigmas * std of

    the layer's magnitudes.
    """
    fractions = []
    for w, _ in state.params:
        a = np.abs(w).ravel()
        fractions.append(float((a > a.mean() + sigmas * a.std()).mean()))
    return fractions


def assign_ratios_onp(state: NetworkState, target_sparsity: float,
                      sigmas: float = OUTLIER_SIGMAS) -> LayerRatioAssignment:
    """Outlier-driven ratios: more outliers -> more important -> lower ratio.

    Falls back to uniform ratios when every layer has the same outlier
    fraction.
    """
    _check_sparsity(target_sparsity)
    fractions = outlier_fractions(state, sigmas=sigmas)
    counts = [w.size for w, _ in state.params]
    return _affine_assignment(fractions, counts, target_sparsity)


def principal_fractions(state: NetworkState, energy: float = PCA_ENERGY):
    """Per layer: fraction of singular directions needed to reach

    ``energy`` of the squared spectral mass (conv kernels are flattened to
    (filters, rest)).
    """
    fractions = []
    for layer_id, (w, _) in enumerate(state.params):
        matrix = w.reshape(w.shape[0], -1)
        try:
            s = np.linalg.svd(matrix, compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise CriteriaError(f"SVD failed for layer {layer_id}: {exc}") from exc
        power = s.astype(np.float64) ** 2
        total = power.sum()
        if total == 0.0:
            fractions.append(1.0)  # all-zero layer: treat as maximally spread
            continue
        rank_needed = int(np.searchsorted(np.cumsum(power), energy * total) + 1)
        fractions.append(rank_needed / min(matrix.shape))
    return fractions


def assign_ratios_pnp(state: NetworkState, target_sparsity: float,
                      energy: float = PCA_ENERGY) -> LayerRatioAssignment:
    """PCA-driven ratios: a larger principal-component fraction -> lower

    ratio, under the same affine mapping and exact-target rounding.
    """
    _check_sparsity(target_sparsity)
    fractions = principal_fractions(state, energy=energy)
    counts = [w.size for w, _ in state.params]
    return _affine_assignment(fractions, counts, target_sparsity)


def mask_from_ratios(state: NetworkState, assignment: LayerRatioAssignment) -> UnstructuredMask:
    """Materialize a ratio assignment as a magnitude mask (per layer, the

    assigned count of smallest-|w| weights is zeroed).
    """
    masks = []
    for (w, _), k in zip(state.params, assignment.removal_counts):
        keep = np.ones(w.size, dtype=bool)
        order = np.argsort(np.abs(w).ravel(), kind="stable")
        keep[order[:k]] = False
        masks.append(keep.reshape(w.shape))
    return UnstructuredMask(layers=tuple(masks))
