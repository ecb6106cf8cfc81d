"""Binary checkpoint container shared by every trainable model here.

Layout: magic b"CAATP1", a little-endian uint32 byte length, a JSON
manifest (sorted keys) holding the config dict plus per-tensor name,
shape, and byte offset, then the raw little-endian float32 payloads in
manifest order. Writing the same tensors twice yields identical bytes,
which is what the reproducibility tests pin.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CAATP1"


class CheckpointError(ValueError):
    """Raised for unreadable, truncated, or inconsistent checkpoint files."""


def write_checkpoint(path, config: dict, tensors: dict[str, np.ndarray]) -> None:
    """Serialize `tensors` (cast to float32) with `config` into one file."""
    entries = []
    payloads = []
    offset = 0
    for name in tensors:  # dict order is the storage order
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payloads.append(arr.tobytes())
        offset += len(payloads[-1])
    manifest = json.dumps(
        {"config": config, "tensors": entries}, sort_keys=True
    ).encode("utf-8")
    blob = MAGIC + struct.pack("<I", len(manifest)) + manifest + b"".join(payloads)
    Path(path).write_bytes(blob)


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Load (config, {name: float32 array}) with full consistency checks."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a CAATP1 checkpoint")
    cursor = len(MAGIC)
    (manifest_len,) = struct.unpack_from("<I", raw, cursor)
    cursor += 4
    if cursor + manifest_len > len(raw):
        raise CheckpointError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(raw[cursor : cursor + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable manifest: {exc}") from exc
    cursor += manifest_len
    if not isinstance(manifest, dict) or "tensors" not in manifest:
        raise CheckpointError(f"{path}: manifest missing tensor table")

    payload = raw[cursor:]
    tensors: dict[str, np.ndarray] = {}
    total = 0
    for entry in manifest["tensors"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        start = int(entry["offset"])
        end = start + 4 * count
        if end > len(payload):
            raise CheckpointError(
                f"{path}: tensor {entry['name']!r} extends past end of file"
            )
        data = np.frombuffer(payload[start:end], dtype="<f4").reshape(shape)
        tensors[entry["name"]] = data.copy()
        total = max(total, end)
    if total != len(payload):
        raise CheckpointError(f"{path}: {len(payload) - total} trailing payload bytes")
    return manifest.get("config", {}), tensors
