"""Deterministic synthetic digit corpus.

Renders 28x28 grayscale digits from a 5x7 glyph font with random affine
jitter (rotation, scale, shear, shift), stroke-brightness variation and
pixel noise.  The corpus is written as standard IDX files, so everything
downstream exercises the exact same loading path as a real dataset.  It
exists so that desk-scale experiments remain runnable on machines without
a copy of the MNIST family.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..seeding import derive_seed
from . import idx
from .dataset import SplitPair, load_split

_GLYPHS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}

SIDE = 28


def _templates() -> np.ndarray:
    """One 28x28 float template per class: the glyph upscaled 3x, centered."""
    out = np.zeros((10, SIDE, SIDE), dtype=np.float64)
    for digit, rows in _GLYPHS.items():
        bitmap = np.array([[c == "1" for c in row] for row in rows], dtype=np.float64)
        big = np.kron(bitmap, np.ones((3, 3)))          # 21 x 15
        oy, ox = (SIDE - big.shape[0]) // 2, (SIDE - big.shape[1]) // 2
        out[digit, oy:oy + big.shape[0], ox:ox + big.shape[1]] = big
    return out


_TEMPLATES = _templates()

# output pixel grid, reused for every sample
_YY, _XX = np.meshgrid(np.arange(SIDE, dtype=np.float64),
                       np.arange(SIDE, dtype=np.float64), indexing="ij")
_CENTER = (SIDE - 1) / 2.0


def _bilinear(template: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    fy, fx = ys - y0, xs - x0
    acc = np.zeros_like(ys)
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            yy = y0 + dy
            xx = x0 + dx
            inside = (yy >= 0) & (yy < SIDE) & (xx >= 0) & (xx < SIDE)
            acc += np.where(inside, template[yy.clip(0, SIDE - 1),
                                             xx.clip(0, SIDE - 1)], 0.0) * wy * wx
    return acc


def _render(digit: int, rng: np.random.Generator) -> np.ndarray:
    angle = math.radians(rng.uniform(-16.0, 16.0))
    sy = rng.uniform(0.78, 1.22)
    sx = rng.uniform(0.78, 1.22)
    shear = rng.uniform(-0.18, 0.18)
    ty = rng.uniform(-3.5, 3.5)
    tx = rng.uniform(-3.5, 3.5)

    cos_a, sin_a = math.cos(angle), math.sin(angle)
    # inverse map: output coords -> template coords
    yr = _YY - _CENTER - ty
    xr = _XX - _CENTER - tx
    ys = (cos_a * yr + sin_a * xr) / sy
    xs = (-sin_a * yr + cos_a * xr) / sx + shear * ys
    img = _bilinear(_TEMPLATES[digit], ys + _CENTER, xs + _CENTER)

    img *= rng.uniform(0.55, 1.0)
    img += rng.normal(0.0, rng.uniform(0.04, 0.14), size=img.shape)
    return np.clip(img, 0.0, 1.0)


def render_corpus(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` uint8 images with balanced class labels, fully seeded."""
    rng = np.random.default_rng(derive_seed(seed, "synth-corpus", n))
    labels = np.arange(n) % 10
    rng.shuffle(labels)
    images = np.empty((n, SIDE, SIDE), dtype=np.uint8)
    for i in range(n):
        images[i] = np.rint(_render(int(labels[i]), rng) * 255.0).astype(np.uint8)
    return images, labels.astype(np.uint8)


def ensure_synth_split(root, train_n: int = 14000, test_n: int = 4000,
                       seed: int = 7, name: str = "synth") -> SplitPair:
    """Write the corpus under ``<root>/<name>/`` (if missing) and load it

    back through the IDX pipeline.
    """
    directory = Path(root) / name
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "train-images-idx3-ubyte": None, "train-labels-idx1-ubyte": None,
        "t10k-images-idx3-ubyte": None, "t10k-labels-idx1-ubyte": None,
    }
    if not all((directory / f).exists() for f in files):
        train_images, train_labels = render_corpus(train_n, derive_seed(seed, "train"))
        test_images, test_labels = render_corpus(test_n, derive_seed(seed, "test"))
        idx.write_idx_pair(train_images, train_labels,
                           directory / "train-images-idx3-ubyte",
                           directory / "train-labels-idx1-ubyte")
        idx.write_idx_pair(test_images, test_labels,
                           directory / "t10k-images-idx3-ubyte",
                           directory / "t10k-labels-idx1-ubyte")
    return load_split(root, name)
