import numpy as np
import pytest

from prune_audit.engine import (
    CheckpointError,
    init_state,
    load_checkpoint,
    save_checkpoint,
)

from conftest import all_kinds_spec


def test_round_trip_is_bit_exact(tmp_path):
    state = init_state(all_kinds_spec(), seed=9)
    path = tmp_path / "net.ckpt"
    save_checkpoint(state, path)
    loaded = load_checkpoint(path)
    assert loaded.spec == state.spec
    assert loaded.rng_seed == state.rng_seed
    for (w1, b1), (w2, b2) in zip(state.params, loaded.params):
        assert w1.tobytes() == w2.tobytes()
        assert b1.tobytes() == b2.tobytes()


def test_save_is_deterministic(tmp_path):
    state = init_state(all_kinds_spec(), seed=1)
    save_checkpoint(state, tmp_path / "a.ckpt")
    save_checkpoint(state, tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_header_magic_and_version(tmp_path):
    state = init_state(all_kinds_spec(), seed=0)
    path = tmp_path / "net.ckpt"
    save_checkpoint(state, path)
    raw = path.read_bytes()
    assert raw[:4] == b"PAUD"
    assert int.from_bytes(raw[4:8], "little") == 1


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bogus.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_unsupported_version_rejected(tmp_path):
    state = init_state(all_kinds_spec(), seed=0)
    path = tmp_path / "net.ckpt"
    save_checkpoint(state, path)
    raw = bytearray(path.read_bytes())
    raw[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_float32_payload_is_little_endian(tmp_path):
    state = init_state(all_kinds_spec(), seed=4)
    path = tmp_path / "net.ckpt"
    save_checkpoint(state, path)
    raw = path.read_bytes()
    header_len = int.from_bytes(raw[8:12], "little")
    body = raw[12 + header_len:]
    w0 = state.params[0][0]
    got = np.frombuffer(body, dtype="<f4", count=w0.size).reshape(w0.shape)
    np.testing.assert_array_equal(got, w0)
