"""ACTW checkpoint container.

Layout: magic "ACTW", format-version u16 LE, header-length u32 LE, header
JSON (parameter names/shapes/dtypes, optimizer-state presence, arbitrary
extra sections), then the raw little-endian buffers in header order.
Round-trips byte-exact.
"""
from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"ACTW"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedError(CheckpointError):
    pass


def save_checkpoint(path, params, optimizer=None, extra=None):
    """Write named parameter arrays (and optional ADAM moments) to `path`.

    params: list of (name, ndarray). optimizer: None or dict with keys
    step/lr/beta1/beta2/eps/m/v where m and v are arrays aligned with params.
    extra: JSON-serializable dict stored verbatim in the header.
    """
    header = {
        "params": [{"name": n, "shape": list(a.shape), "dtype": "<f8"} for n, a in params],
        "optimizer": None,
        "extra": extra or {},
    }
    if optimizer is not None:
        header["optimizer"] = {
            "present": True,
            "step": optimizer["step"],
            "lr": optimizer["lr"],
            "beta1": optimizer["beta1"],
            "beta2": optimizer["beta2"],
            "eps": optimizer["eps"],
            "slots": ["m", "v"],
        }
    head = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        f.write(struct.pack("<I", len(head)))
        f.write(head)
        for _, a in params:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        if optimizer is not None:
            for slot in ("m", "v"):
                for a in optimizer[slot]:
                    f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Read an ACTW file; returns (params, optimizer, extra).

    params is a list of (name, ndarray); optimizer mirrors the dict accepted
    by save_checkpoint or is None.
    """
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 10:
        raise TruncatedError(f"{path}: file shorter than fixed header")
    if raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack("<H", raw[4:6])
    if version != VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {VERSION}")
    (hlen,) = struct.unpack("<I", raw[6:10])
    if len(raw) < 10 + hlen:
        raise TruncatedError(f"{path}: truncated header")
    header = json.loads(raw[10:10 + hlen].decode("utf-8"))
    off = 10 + hlen

    def take(shape):
        nonlocal off
        n = int(np.prod(shape)) if shape else 1
        nbytes = n * 8
        if off + nbytes > len(raw):
            raise TruncatedError(f"{path}: truncated buffer section")
        a = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(shape).copy()
        off += nbytes
        return a

    params = [(spec["name"], take(tuple(spec["shape"]))) for spec in header["params"]]
    optimizer = None
    if header.get("optimizer"):
        opt = header["optimizer"]
        optimizer = {
            "step": opt["step"],
            "lr": opt["lr"],
            "beta1": opt["beta1"],
            "beta2": opt["beta2"],
            "eps": opt["eps"],
            "m": [take(tuple(spec["shape"])) for spec in header["params"]],
            "v": [take(tuple(spec["shape"])) for spec in header["params"]],
        }
    if off != len(raw):
        raise TruncatedError(f"{path}: {len(raw) - off} trailing bytes")
    return params, optimizer, header.get("extra", {})
