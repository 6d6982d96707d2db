"""Versioned binary checkpoint container.

Layout: magic ``PAUD`` | version u32 | header length u32 | JSON header
(architecture, seed, parameter shapes) | raw little-endian float32
parameter arrays in layer order, weight before bias.  Round-trips are
bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .layers import Conv2d, Flatten, FullyConnected, MaxPool2d, ReLU
from .network import NetworkSpec, NetworkState

MAGIC = b"PAUD"
VERSION = 1

_KINDS = {
    "Conv2d": Conv2d,
    "MaxPool2d": MaxPool2d,
    "ReLU": ReLU,
    "Flatten": Flatten,
    "FullyConnected": FullyConnected,
}


class CheckpointError(Exception):
    pass


def _layer_to_dict(layer) -> dict:
    d = {"kind": type(layer).__name__}
    d.update(asdict(layer))
    return d


def _layer_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind")
    if kind not in _KINDS:
        raise CheckpointError(f"unknown layer kind '{kind}' in checkpoint")
    return _KINDS[kind](**d)


def save_checkpoint(state: NetworkState, path) -> None:
    header = {
        "input_shape": list(state.spec.input_shape),
        "layers": [_layer_to_dict(layer) for layer in state.spec.layers],
        "rng_seed": state.rng_seed,
        "param_shapes": [
            [list(w.shape), list(b.shape)] for w, b in state.params
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(blob)))
        f.write(blob)
        for w, b in state.params:
            f.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def load_checkpoint(path) -> NetworkState:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    spec = NetworkSpec(
        input_shape=tuple(header["input_shape"]),
        layers=tuple(_layer_from_dict(d) for d in header["layers"]),
    )
    offset = 12 + header_len
    params = []
    for w_shape, b_shape in header["param_shapes"]:
        w_count, b_count = int(np.prod(w_shape)), int(np.prod(b_shape))
        w = np.frombuffer(raw, dtype="<f4", count=w_count, offset=offset)
        offset += 4 * w_count
        b = np.frombuffer(raw, dtype="<f4", count=b_count, offset=offset)
        offset += 4 * b_count
        params.append((w.reshape(w_shape).copy(), b.reshape(b_shape).copy()))
    return NetworkState(spec=spec, params=tuple(params),
                        rng_seed=header["rng_seed"])
