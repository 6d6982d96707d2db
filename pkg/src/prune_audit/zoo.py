"""Small convolutional classifier family used for exhaustive pruning sweeps.

The base network ("W10D5") has five weighted layers, each ten units wide:

    Conv(10, 5x5) -> MaxPool2 -> ReLU
    Conv(10, 5x5) -> MaxPool2 -> ReLU
    Conv(10, 3x3) -> ReLU
    Flatten -> FC(10) -> ReLU -> FC(10 classes)

Width variants ("W<k>D5") widen only the first conv layer; depth variants
("W10D<5+m>") insert extra FC(10)+ReLU blocks before the output layer.
The exact kernel/pool dimensions above are this library's declared
convention; sweep results are therefore comparable to published numbers at
trend level only, and reports say so.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .engine import Conv2d, Flatten, FullyConnected, MaxPool2d, NetworkSpec, ReLU
from .engine import infer_shapes as _infer_shapes

INPUT_SHAPE = (1, 28, 28)
NUM_CLASSES = 10
BASE_WIDTH = 10
BASE_DEPTH = 5


@dataclass(frozen=True)
class VariantSpec:
    conv1_width: int = BASE_WIDTH
    depth: int = BASE_DEPTH
    base_width: int = BASE_WIDTH

    def __post_init__(self):
        if self.depth < BASE_DEPTH:
            raise ValueError(f"depth must be >= {BASE_DEPTH}, got {self.depth}")
        if self.conv1_width < self.base_width:
            raise ValueError(
                f"conv1_width must be >= base width {self.base_width}, "
                f"got {self.conv1_width}"
            )

    @property
    def name(self) -> str:
        return f"W{self.conv1_width}D{self.depth}"


_VARIANT_RE = re.compile(r"^W(\d+)D(\d+)$")


def parse_variant(text: str) -> VariantSpec:
    """Parse a variant name like ``W30D5`` or ``W10D8``."""
    m = _VARIANT_RE.match(text.strip())
    if not m:
        raise ValueError(f"variant must match W<width>D<depth>, got '{text}'")
    return VariantSpec(conv1_width=int(m.group(1)), depth=int(m.group(2)))


def build_lenet5_mini(variant: VariantSpec = VariantSpec()) -> NetworkSpec:
    """Construct the network for a variant; 28x28 in, 10 logits out."""
    w = variant.base_width
    layers = [
        Conv2d(variant.conv1_width, 5, 5), MaxPool2d(2), ReLU(),
        Conv2d(w, 5, 5), MaxPool2d(2), ReLU(),
        Conv2d(w, 3, 3), ReLU(),
        Flatten(),
        FullyConnected(w), ReLU(),
    ]
    for _ in range(variant.depth - BASE_DEPTH):
        layers += [FullyConnected(w), ReLU()]
    layers.append(FullyConnected(NUM_CLASSES))
    spec = NetworkSpec(input_shape=INPUT_SHAPE, layers=tuple(layers))
    _infer_shapes(spec)  # surfaces spatial underflow immediately
    return spec
