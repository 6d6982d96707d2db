"""Dataset loading (IDX container), normalization, batching and subsetting."""

from .dataset import (
    Dataset,
    NormStats,
    SplitPair,
    batch_iter,
    fisher_yates_permutation,
    load_idx,
    load_split,
    standardize,
    subset,
    to_idx_bytes,
)
from .idx import (
    CountMismatchError,
    IdxError,
    TruncatedFileError,
    WrongMagicError,
)
from .synth import ensure_synth_split, render_corpus

__all__ = [
    "CountMismatchError",
    "Dataset",
    "IdxError",
    "NormStats",
    "SplitPair",
    "TruncatedFileError",
    "WrongMagicError",
    "batch_iter",
    "ensure_synth_split",
    "fisher_yates_permutation",
    "load_idx",
    "load_split",
    "render_corpus",
    "standardize",
    "subset",
    "to_idx_bytes",
]
