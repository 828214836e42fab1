"""Model files: magic, JSON header, raw little-endian payload.

Layout::

    b"GLM1" | u32 header_len (LE) | header JSON (utf-8) | payload

The header holds the net spec, version tag, seed, dtype, payload length and a
CRC32 of the payload. Arrays are stored in ``weights[0], biases[0], ...`` order.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import ChecksumMismatch, ModelLoadError, VersionMismatch
from .net import MODEL_VERSION, ModelParams, NetSpec, init_params

MAGIC = b"GLM1"


def model_to_bytes(params: ModelParams) -> bytes:
    dt = np.dtype(params.dtype).newbyteorder("<")
    payload = b"".join(np.ascontiguousarray(a, dtype=dt).tobytes() for a in params.arrays())
    header = {
        "version": params.version,
        "net": params.net.to_dict(),
        "seed": params.seed,
        "dtype": np.dtype(params.dtype).name,
        "payload_len": len(payload),
        "crc32": zlib.crc32(payload),
        "meta": params.meta,
    }
    hb = json.dumps(header, sort_keys=True).encode()
    return MAGIC + struct.pack("<I", len(hb)) + hb + payload


def model_from_bytes(blob: bytes) -> ModelParams:
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise ModelLoadError("not a grasplab model file")
    (hlen,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + hlen:
        raise ChecksumMismatch("model header truncated")
    try:
        header = json.loads(blob[8 : 8 + hlen])
    except ValueError as e:
        raise ModelLoadError(f"corrupt model header: {e}") from None
    if header.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"model version {header.get('version')!r}, expected {MODEL_VERSION!r}")
    payload = blob[8 + hlen :]
    if len(payload) != header["payload_len"] or zlib.crc32(payload) != header["crc32"]:
        raise ChecksumMismatch("model payload length or CRC32 does not match its header")
    net = NetSpec.from_dict(header["net"])
    dtype = np.dtype(header["dtype"])
    shapes = init_params(net, 0, np.float32)
    expected = sum(a.size for a in shapes.arrays()) * dtype.itemsize
    if expected != len(payload):
        raise VersionMismatch(f"net spec implies {expected} payload bytes, file has {len(payload)}")
    arrays = []
    off = 0
    le = dtype.newbyteorder("<")
    for a in shapes.arrays():
        n = a.size * dtype.itemsize
        arrays.append(np.frombuffer(payload, dtype=le, count=a.size, offset=off).reshape(a.shape).astype(dtype))
        off += n
    return ModelParams(net, arrays[0::2], arrays[1::2], header["seed"], header["version"], header.get("meta", {}))


def save_model(params: ModelParams, path):
    Path(path).write_bytes(model_to_bytes(params))


def load_model(path) -> ModelParams:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise ModelLoadError(f"cannot read model {path}: {e}") from e
    return model_from_bytes(blob)


def model_hash(params: ModelParams) -> str:
    return hashlib.sha256(model_to_bytes(params)).hexdigest()
