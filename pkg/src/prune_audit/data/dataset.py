"""In-memory datasets: loading, normalization, batching and subsetting.

Datasets are immutable after load and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..seeding import derive_seed
from . import idx


@dataclass(frozen=True)
class Dataset:
    """Images as float32 in [0, 1], shape (N, 1, H, W); integer labels."""

    images: np.ndarray
    labels: np.ndarray
    name: str

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise idx.CountMismatchError(self.images.shape[0], self.labels.shape[0])
        if self.images.shape[0] == 0:
            raise ValueError("dataset must not be empty")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= 10):
            raise ValueError("labels must lie in [0, 10)")

    def __len__(self) -> int:
        return self.images.shape[0]


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset


@dataclass(frozen=True)
class NormStats:
    mean: float
    std: float


def load_idx(images_path, labels_path, name: str = "") -> Dataset:
    """Load an image/label IDX pair; pixels are mapped to [0, 1] by /255."""
    images = idx.read_idx_images(images_path)
    labels = idx.read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise idx.CountMismatchError(images.shape[0], labels.shape[0])
    n, h, w = images.shape
    floats = (images.astype(np.float32) / np.float32(255.0)).reshape(n, 1, h, w)
    return Dataset(images=floats, labels=labels.astype(np.int64),
                   name=name or Path(images_path).stem)


def to_idx_bytes(ds: Dataset) -> tuple[bytes, bytes]:
    """Serialize back to IDX bytes; inverse of :func:`load_idx` for any

    dataset whose pixels came from u8/255.
    """
    n, _, h, w = ds.images.shape
    pixels = np.rint(ds.images.reshape(n, h, w) * 255.0).astype(np.uint8)
    return idx.images_to_idx_bytes(pixels), idx.labels_to_idx_bytes(ds.labels)


_SPLIT_FILES = {
    "train": ("train-images", "train-labels"),
    "test": ("t10k-images", "t10k-labels"),
}


def _find_file(directory: Path, prefix: str) -> Path:
    matches = sorted(p for p in directory.iterdir() if p.name.startswith(prefix))
    if not matches:
        raise FileNotFoundError(f"no file starting with '{prefix}' in {directory}")
    return matches[0]


def load_split(root, name: str) -> SplitPair:
    """Load ``<root>/<name>/{train-images,train-labels,t10k-images,t10k-labels}``

    (raw or gzipped).
    """
    directory = Path(root) / name
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    parts = {}
    for split, (img_prefix, lbl_prefix) in _SPLIT_FILES.items():
        parts[split] = load_idx(
            _find_file(directory, img_prefix),
            _find_file(directory, lbl_prefix),
            name=f"{name}-{split}",
        )
    return SplitPair(train=parts["train"], test=parts["test"])


def standardize(ds: Dataset, stats: NormStats | None = None) -> tuple[Dataset, NormStats]:
    """Subtract the mean and divide by the std of all pixel values.

    Pass the training set's stats when normalizing a test set.
    """
    if stats is None:
        mean = float(np.mean(ds.images, dtype=np.float64))
        std = float(np.std(ds.images, dtype=np.float64))
        stats = NormStats(mean=mean, std=std)
    if stats.std == 0.0:
        raise ValueError(f"zero pixel std for dataset '{ds.name}'")
    images = ((ds.images - np.float32(stats.mean)) / np.float32(stats.std))
    return Dataset(images=images, labels=ds.labels, name=ds.name), stats


def fisher_yates_permutation(n: int, seed: int) -> np.ndarray:
    """Seeded Fisher-Yates shuffle of ``arange(n)``."""
    rng = np.random.default_rng(seed)
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def batch_iter(ds: Dataset, batch_size: int, seed: int = 0, shuffle: bool = False):
    """Yield ``(images, labels)`` batches covering the dataset exactly once.

    The final partial batch is kept.  With ``shuffle`` the order is a seeded
    Fisher-Yates permutation; otherwise source order.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = len(ds)
    order = fisher_yates_permutation(n, seed) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        sel = order[start:start + batch_size]
        yield ds.images[sel], ds.labels[sel]


def subset(ds: Dataset, n: int, seed: int) -> Dataset:
    """Deterministic stratified sample of ``n`` items.

    Per-class quotas are proportional (largest remainder), so the label
    distribution tracks the parent's.
    """
    total = len(ds)
    if not 0 < n <= total:
        raise ValueError(f"subset size {n} out of range (dataset has {total})")
    if n == total:
        return ds
    classes, counts = np.unique(ds.labels, return_counts=True)
    exact = counts * (n / total)
    quotas = np.floor(exact).astype(int)
    remainders = exact - quotas
    for cls_pos in np.argsort(-remainders, kind="stable")[: n - quotas.sum()]:
        quotas[cls_pos] += 1
    picked = []
    for cls, quota in zip(classes, quotas):
        pool = np.flatnonzero(ds.labels == cls)
        perm = fisher_yates_permutation(len(pool), derive_seed(seed, "subset", int(cls)))
        picked.append(pool[perm[:quota]])
    sel = np.sort(np.concatenate(picked))
    return Dataset(images=ds.images[sel], labels=ds.labels[sel],
                   name=f"{ds.name}-subset{n}")
