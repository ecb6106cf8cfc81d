"""Binary checkpoint container: layout, determinism, corruption handling."""

import json
import struct

import numpy as np
import pytest

from retouchkit.checkpointing import (
    MAGIC,
    CheckpointError,
    read_checkpoint,
    write_checkpoint,
)


def sample_tensors(seed=0):
    rng = np.random.default_rng(seed)
    return {
        "layer.w": rng.normal(size=(4, 3)).astype(np.float64),
        "layer.b": rng.normal(size=3).astype(np.float64),
        "scalar": np.float32(2.5),
    }


class TestRoundTrip:
    def test_values_survive_as_float32(self, tmp_path):
        path = tmp_path / "m.ckpt"
        tensors = sample_tensors()
        write_checkpoint(path, {"kind": "test", "n": 3}, tensors)
        config, loaded = read_checkpoint(path)
        assert config == {"kind": "test", "n": 3}
        assert set(loaded) == set(tensors)
        for name, arr in tensors.items():
            assert loaded[name].dtype == np.float32
            np.testing.assert_array_equal(
                loaded[name], np.asarray(arr, dtype=np.float32)
            )

    def test_write_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        write_checkpoint(a, {"x": 1}, sample_tensors())
        write_checkpoint(b, {"x": 1}, sample_tensors())
        assert a.read_bytes() == b.read_bytes()

    def test_file_starts_with_magic(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_checkpoint(path, {}, sample_tensors())
        assert path.read_bytes().startswith(MAGIC)

    def test_empty_tensor_dict(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_checkpoint(path, {"only": "config"}, {})
        config, tensors = read_checkpoint(path)
        assert config == {"only": "config"}
        assert tensors == {}

    def test_storage_follows_dict_order(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_checkpoint(path, {}, {"z": np.zeros(2), "a": np.ones(2)})
        raw = path.read_bytes()
        (mlen,) = struct.unpack_from("<I", raw, len(MAGIC))
        manifest = json.loads(raw[len(MAGIC) + 4 : len(MAGIC) + 4 + mlen])
        names = [e["name"] for e in manifest["tensors"]]
        assert names == ["z", "a"]
        assert manifest["tensors"][0]["offset"] == 0
        assert manifest["tensors"][1]["offset"] == 8


class TestCorruption:
    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"PK\x03\x04 definitely a zip file")
        with pytest.raises(CheckpointError, match="not a CAATP1"):
            read_checkpoint(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ckpt"
        path.write_bytes(b"")
        with pytest.raises(CheckpointError):
            read_checkpoint(path)

    def test_truncated_manifest(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_checkpoint(path, {"k": 1}, sample_tensors())
        raw = path.read_bytes()
        path.write_bytes(raw[: len(MAGIC) + 4 + 5])
        with pytest.raises(CheckpointError, match="truncated manifest"):
            read_checkpoint(path)

    def test_garbled_manifest_json(self, tmp_path):
        path = tmp_path / "m.ckpt"
        manifest = b"{not json"
        path.write_bytes(MAGIC + struct.pack("<I", len(manifest)) + manifest)
        with pytest.raises(CheckpointError, match="unreadable manifest"):
            read_checkpoint(path)

    def test_manifest_missing_tensor_table(self, tmp_path):
        path = tmp_path / "m.ckpt"
        manifest = json.dumps({"config": {}}).encode()
        path.write_bytes(MAGIC + struct.pack("<I", len(manifest)) + manifest)
        with pytest.raises(CheckpointError, match="tensor table"):
            read_checkpoint(path)

    def test_truncated_payload_names_tensor(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_checkpoint(path, {}, sample_tensors())
        raw = path.read_bytes()
        path.write_bytes(raw[:-6])
        with pytest.raises(CheckpointError, match="extends past end"):
            read_checkpoint(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_checkpoint(path, {}, sample_tensors())
        path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
        with pytest.raises(CheckpointError, match="trailing payload"):
            read_checkpoint(path)

    def test_error_is_a_value_error(self):
        assert issubclass(CheckpointError, ValueError)
