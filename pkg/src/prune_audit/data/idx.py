"""IDX container parsing and serialization.

The format is big-endian: a u32 magic (2051 for image files with three
dimension counts, 2049 for label files with one), the dimension sizes as
u32s, then raw unsigned bytes.  Files may be gzip-compressed; compression
is detected from the leading bytes, not the filename.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


class IdxError(Exception):
    """Base class for IDX parsing failures."""


class WrongMagicError(IdxError):
    def __init__(self, path, expected: int, got: int):
        self.expected, self.got = expected, got
        super().__init__(f"{path}: expected magic {expected}, got {got}")


class TruncatedFileError(IdxError):
    def __init__(self, path, needed: int, available: int):
        super().__init__(
            f"{path}: truncated, needed {needed} bytes but only "
            f"{available} available"
        )


class CountMismatchError(IdxError):
    def __init__(self, images: int, labels: int):
        super().__init__(f"image count {images} != label count {labels}")


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_header(raw: bytes, path, magic: int, ndim: int):
    if len(raw) >= 4:
        got = struct.unpack(">I", raw[:4])[0]
        if got != magic:
            raise WrongMagicError(path, magic, got)
    header = 4 * (1 + ndim)
    if len(raw) < header:
        raise TruncatedFileError(path, header, len(raw))
    fields = struct.unpack(f">{1 + ndim}I", raw[:header])
    return fields[1:], raw[header:]


def read_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a uint8 array of shape (N, H, W)."""
    raw = _read_bytes(path)
    (n, h, w), body = _parse_header(raw, path, IMAGE_MAGIC, 3)
    if len(body) < n * h * w:
        raise TruncatedFileError(path, 16 + n * h * w, 16 + len(body))
    return np.frombuffer(body[:n * h * w], dtype=np.uint8).reshape(n, h, w)


def read_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a uint8 array of shape (N,)."""
    raw = _read_bytes(path)
    (n,), body = _parse_header(raw, path, LABEL_MAGIC, 1)
    if len(body) < n:
        raise TruncatedFileError(path, 8 + n, 8 + len(body))
    return np.frombuffer(body[:n], dtype=np.uint8)


def images_to_idx_bytes(images: np.ndarray) -> bytes:
    n, h, w = images.shape
    return struct.pack(">4I", IMAGE_MAGIC, n, h, w) + images.astype(np.uint8).tobytes()


def labels_to_idx_bytes(labels: np.ndarray) -> bytes:
    return struct.pack(">2I", LABEL_MAGIC, len(labels)) + labels.astype(np.uint8).tobytes()


def write_idx_pair(images: np.ndarray, labels: np.ndarray,
                   images_path, labels_path) -> None:
    Path(images_path).write_bytes(images_to_idx_bytes(images))
    Path(labels_path).write_bytes(labels_to_idx_bytes(labels))
