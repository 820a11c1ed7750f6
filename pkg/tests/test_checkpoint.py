import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from nn.checkpoint import MAGIC, load_checkpoint, save_checkpoint


def test_round_trip_keeps_names_order_and_values(tmp_path, rng):
    tensors = {"encoder.weight": rng.normal(size=(3, 4)), "bias": rng.normal(size=5),
               "scalar": np.array(2.5)}
    loaded = load_checkpoint(save_checkpoint(tmp_path / "run" / "model.ckpt", tensors))
    assert list(loaded) == list(tensors)
    for name, values in tensors.items():
        assert loaded[name].shape == values.shape
        assert_array_equal(loaded[name], values)


def test_float32_values_are_widened(tmp_path):
    path = save_checkpoint(tmp_path / "a.ckpt", {"w": np.array([0.5, 1.5], dtype=np.float32)})
    assert load_checkpoint(path)["w"].dtype == np.float64


def test_same_tensors_give_identical_bytes(tmp_path, rng):
    tensors = {"w": rng.normal(size=(2, 2))}
    a = save_checkpoint(tmp_path / "a.ckpt", tensors).read_bytes()
    b = save_checkpoint(tmp_path / "b.ckpt", tensors).read_bytes()
    assert a == b and a[:4] == MAGIC


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 8)
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(path)


def test_unsupported_version(tmp_path):
    path = tmp_path / "v2.ckpt"
    path.write_bytes(MAGIC + struct.pack("<II", 2, 0))
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)


def test_truncated_payload(tmp_path, rng):
    path = save_checkpoint(tmp_path / "t.ckpt", {"w": rng.normal(size=(4, 4))})
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="truncated"):
        load_checkpoint(path)
