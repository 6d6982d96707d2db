"""Structured filter pruning: enumerating removal combinations, applying

them by physically shrinking the network, and selecting the combination
whose train loss after pruning is smallest.

A *combination* names, per prunable (convolutional) layer, the set of
filter indices to remove.  Removing a filter deletes its output channel
and the matching input channel (or flattened positions) of the successor
layer, so the shrunk network computes exactly what the masked original
would.  The classifier output layer is never prunable.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .data.dataset import Dataset
from .engine import (
    Conv2d,
    Flatten,
    FullyConnected,
    NetworkState,
    evaluate_loss,
    infer_shapes,
)
from .seeding import derive_seed

EMPTY_ENCODING = "empty"


class PruningError(Exception):
    pass


@dataclass(frozen=True)
class PruningCombination:
    """Removed filter indices per prunable layer.

    ``removed`` holds ``(layer_ordinal, sorted index tuple)`` pairs for the
    non-empty layers only, sorted by ordinal; ordinals count prunable
    layers (Conv1 = 0).  The canonical form makes combinations hashable
    and totally ordered.
    """

    removed: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self):
        canon = tuple(
            (int(layer), tuple(sorted(int(i) for i in indices)))
            for layer, indices in sorted(self.removed)
            if len(indices) > 0
        )
        for layer, indices in canon:
            if layer < 0 or min(indices) < 0:
                raise PruningError(f"negative layer/filter index in {canon}")
            if len(set(indices)) != len(indices):
                raise PruningError(f"duplicate filter index in layer {layer}")
        object.__setattr__(self, "removed", canon)

    def encode(self) -> str:
        if not self.removed:
            return EMPTY_ENCODING
        return ";".join(
            f"L{layer}:{{{','.join(str(i) for i in indices)}}}"
            for layer, indices in self.removed
        )

    @classmethod
    def parse(cls, text: str) -> "PruningCombination":
        text = text.strip()
        if text == EMPTY_ENCODING or not text:
            return cls(removed=())
        removed = []
        for part in text.split(";"):
            head, _, body = part.partition(":")
            if not head.startswith("L") or not body.startswith("{") or not body.endswith("}"):
                raise PruningError(f"malformed combination encoding: '{text}'")
            indices = tuple(int(t) for t in body[1:-1].split(",") if t != "")
            removed.append((int(head[1:]), indices))
        return cls(removed=tuple(removed))


@dataclass(frozen=True)
class Exhaustive:
    pass


@dataclass(frozen=True)
class Sample:
    count: int
    seed: int


Mode = Union[Exhaustive, Sample]


@dataclass(frozen=True)
class PruningPlan:
    """Per-layer removal ratios (0 = untouched) and the search mode."""

    layer_ratios: tuple[float, ...]
    mode: Mode = Exhaustive()
    max_exhaustive: int = 1_000_000

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.layer_ratios)
        if any(not 0.0 <= r <= 1.0 for r in ratios):
            raise PruningError(f"ratios must lie in [0, 1], got {ratios}")
        object.__setattr__(self, "layer_ratios", ratios)


def removal_count(width: int, ratio: float) -> int:
    """``ratio * width`` as an exact integer; anything else is an error."""
    k = ratio * width
    if abs(k - round(k)) > 1e-9:
        raise PruningError(
            f"ratio {ratio} of width {width} is not an integer filter count"
        )
    k = int(round(k))
    if k >= width and k > 0:
        raise PruningError(
            f"ratio {ratio} would remove all {width} filters of a layer"
        )
    return k


def combination_space_size(widths, ratios) -> int:
    if len(widths) != len(ratios):
        raise PruningError(
            f"{len(ratios)} ratios for {len(widths)} prunable layers"
        )
    size = 1
    for w, r in zip(widths, ratios):
        size *= math.comb(w, removal_count(w, r))
    return size


def _subset_unrank(rank: int, n: int, k: int) -> tuple[int, ...]:
    """The ``rank``-th k-subset of range(n) in lexicographic order."""
    out = []
    x = 0
    for remaining in range(k, 0, -1):
        while True:
            block = math.comb(n - x - 1, remaining - 1)
            if rank < block:
                break
            rank -= block
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def _combo_from_rank(rank: int, widths, counts) -> PruningCombination:
    removed = []
    for layer in range(len(widths) - 1, -1, -1):
        block = math.comb(widths[layer], counts[layer])
        rank, sub = divmod(rank, block)
        if counts[layer]:
            removed.append((layer, _subset_unrank(sub, widths[layer], counts[layer])))
    return PruningCombination(removed=tuple(removed))


def enumerate_combinations(widths, plan: PruningPlan) -> list[PruningCombination]:
    """All combinations (Exhaustive) or a seeded uniform sample without

    replacement (Sample).  Exhaustive output is in lexicographic order and
    duplicate-free by construction.
    """
    widths = [int(w) for w in widths]
    counts = [removal_count(w, r) for w, r in zip(widths, plan.layer_ratios)]
    size = combination_space_size(widths, plan.layer_ratios)

    if isinstance(plan.mode, Exhaustive):
        if size > plan.max_exhaustive:
            raise PruningError(
                f"combination space has {size} elements, above the exhaustive "
                f"cap of {plan.max_exhaustive}; use sampling"
            )
        per_layer = [
            list(itertools.combinations(range(w), k))
            for w, k in zip(widths, counts)
        ]
        combos = []
        for chosen in itertools.product(*per_layer):
            removed = tuple(
                (layer, indices) for layer, indices in enumerate(chosen) if indices
            )
            combos.append(PruningCombination(removed=removed))
        return combos

    count, seed = plan.mode.count, plan.mode.seed
    if count > size:
        raise PruningError(
            f"cannot sample {count} distinct combinations from a space of {size}"
        )
    rng = random.Random(derive_seed(seed, "combination-sample", size))
    if count * 2 >= size:
        ranks = list(range(size))
        rng.shuffle(ranks)
        ranks = ranks[:count]
    else:
        chosen: set[int] = set()
        while len(chosen) < count:
            chosen.add(rng.randrange(size))
        ranks = sorted(chosen)
        rng.shuffle(ranks)
    return [_combo_from_rank(r, widths, counts) for r in ranks]


def prunable_layer_positions(state_or_spec) -> list[int]:
    spec = getattr(state_or_spec, "spec", state_or_spec)
    return [i for i, l in enumerate(spec.layers) if isinstance(l, Conv2d)]


def prunable_widths(state_or_spec) -> list[int]:
    spec = getattr(state_or_spec, "spec", state_or_spec)
    return [l.out_channels for l in spec.layers if isinstance(l, Conv2d)]


def apply_combination(state: NetworkState, combo: PruningCombination) -> NetworkState:
    """Physically remove the named filters; returns a dense, shape-consistent

    network whose outputs match the masked original on any input.
    """
    spec = state.spec
    conv_positions = prunable_layer_positions(spec)
    removed_by_ordinal = dict(combo.removed)
    invalid = set(removed_by_ordinal) - set(range(len(conv_positions)))
    if invalid:
        raise PruningError(
            f"combination names layer(s) {sorted(invalid)} but only "
            f"{len(conv_positions)} layers are prunable (the output layer "
            f"is never pruned)"
        )
    shapes = infer_shapes(spec)

    new_layers = []
    new_params = []
    param_i = 0
    in_keep: list[int] | None = None  # kept channels/positions of the current tensor
    for pos, layer in enumerate(spec.layers):
        if isinstance(layer, Conv2d):
            w, b = state.params[param_i]
            param_i += 1
            ordinal = conv_positions.index(pos)
            removed = removed_by_ordinal.get(ordinal, ())
            if removed and max(removed) >= layer.out_channels:
                raise PruningError(
                    f"filter index {max(removed)} out of range for layer "
                    f"L{ordinal} of width {layer.out_channels}"
                )
            if len(removed) >= layer.out_channels:
                raise PruningError(f"layer L{ordinal} would lose all filters")
            keep_out = [c for c in range(layer.out_channels) if c not in set(removed)]
            w2 = w[keep_out]
            if in_keep is not None:
                w2 = w2[:, in_keep]
            new_layers.append(replace(layer, out_channels=len(keep_out)))
            new_params.append((np.ascontiguousarray(w2), b[keep_out].copy()))
            in_keep = keep_out if len(keep_out) < layer.out_channels else None
        elif isinstance(layer, Flatten):
            if in_keep is not None:
                c, h, wdt = shapes[pos - 1] if pos else spec.input_shape
                span = h * wdt
                in_keep = [c0 * span + k for c0 in in_keep for k in range(span)]
            new_layers.append(layer)
        elif isinstance(layer, FullyConnected):
            w, b = state.params[param_i]
            param_i += 1
            w2 = w[:, in_keep] if in_keep is not None else w
            new_layers.append(layer)
            new_params.append((np.ascontiguousarray(w2), b.copy()))
            in_keep = None
        else:  # MaxPool2d / ReLU keep channel structure
            new_layers.append(layer)

    new_spec = replace(spec, layers=tuple(new_layers))
    return NetworkState(spec=new_spec, params=tuple(new_params),
                        rng_seed=state.rng_seed)


def keep_budget(state: NetworkState, combo: PruningCombination) -> int:
    """Number of parameters surviving the combination."""
    from .engine import param_count

    return param_count(apply_combination(state, combo).spec)


def pruned_train_loss(state: NetworkState, trainset: Dataset,
                      batch_size: int = 512) -> float:
    """Exact training-set mean loss of an (already pruned) network.

    Pure evaluation: no parameter is updated.
    """
    return evaluate_loss(state, trainset, batch_size=batch_size)


def oracle_select(combos, losses) -> PruningCombination:
    """Argmin of the pruned train loss; exact ties break toward the

    lexicographically smallest combination.
    """
    combos = list(combos)
    losses = [float(v) for v in losses]
    if not combos:
        raise PruningError("oracle_select needs at least one combination")
    if len(combos) != len(losses):
        raise PruningError(
            f"{len(combos)} combinations but {len(losses)} losses"
        )
    if any(not math.isfinite(v) for v in losses):
        raise PruningError("losses must be finite")
    best = min(range(len(combos)), key=lambda i: (losses[i], combos[i].removed))
    return combos[best]
