"""Flat binary container for named parameter arrays.

Layout: 8-byte magic, uint32 format version, uint32 manifest length,
manifest JSON (sorted keys), then all tensors as raw little-endian float64
concatenated in manifest order. Writing is byte-deterministic for a given
(arrays, meta) input: tensors are stored sorted by name and the manifest
uses compact sorted-key JSON.
"""

import json

import numpy as np

from nndialog.errors import CheckpointError

MAGIC = b"NNDLGPRM"
FORMAT_VERSION = 1


def save_params(path, arrays, meta=None):
    """Write name -> float64 ndarray mapping plus a JSON-able meta dict."""
    entries = []
    offset = 0
    blobs = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.size
    manifest = {"meta": meta or {}, "tensors": entries}
    payload = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(FORMAT_VERSION.to_bytes(4, "little"))
        fh.write(len(payload).to_bytes(4, "little"))
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)


def load_params(path):
    """Read a container; returns (dict name -> float64 ndarray, meta dict)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:8] != MAGIC:
        raise CheckpointError(f"not a parameter container: {path}")
    version = int.from_bytes(raw[8:12], "little")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported container version {version} in {path}")
    mlen = int.from_bytes(raw[12:16], "little")
    if len(raw) < 16 + mlen:
        raise CheckpointError(f"truncated manifest in {path}")
    try:
        manifest = json.loads(raw[16:16 + mlen].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"corrupt manifest in {path}: {exc}") from exc
    blob = raw[16 + mlen:]
    arrays = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        start = entry["offset"] * 8
        end = start + size * 8
        if end > len(blob):
            raise CheckpointError(f"truncated tensor {entry['name']!r} in {path}")
        arr = np.frombuffer(blob[start:end], dtype="<f8").reshape(shape)
        arrays[entry["name"]] = np.ascontiguousarray(arr, dtype=np.float64)
    return arrays, manifest.get("meta", {})
