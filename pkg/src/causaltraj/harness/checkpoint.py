"""Self-describing binary checkpoints.

Layout: magic ``CTPC`` | u16 version | u32 header length | JSON header |
payload of little-endian arrays at the offsets the header names. Arrays
default to 64-bit so a save/load round trip is exact; 32-bit entries are
accepted for compact training-mode snapshots.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FormatError, IntegrityError, VersionError

MAGIC = b"CTPC"
VERSION = 1
_HEAD = struct.Struct("<4sHI")
_DTYPES = {"f8": "<f8", "f4": "<f4"}


@dataclass
class Checkpoint:
    family: str
    config_text: str
    params: dict[str, np.ndarray]
    opt_m: dict[str, np.ndarray] = field(default_factory=dict)
    opt_v: dict[str, np.ndarray] = field(default_factory=dict)
    opt_hyper: dict[str, float] = field(default_factory=dict)
    opt_step: int = 0
    running_mean: np.ndarray | None = None
    train_step: int = 0
    version: int = VERSION

    @property
    def config_digest(self) -> str:
        return config_digest(self.config_text)

    def parameter_count(self) -> int:
        return sum(v.size for v in self.params.values())


def config_digest(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()


def _entries(checkpoint: Checkpoint, dtype: str):
    for name, arr in checkpoint.params.items():
        yield f"param/{name}", arr, dtype
    for name, arr in checkpoint.opt_m.items():
        yield f"adam_m/{name}", arr, dtype
    for name, arr in checkpoint.opt_v.items():
        yield f"adam_v/{name}", arr, dtype
    if checkpoint.running_mean is not None:
        yield "state/running_mean", checkpoint.running_mean, dtype


def checkpoint_save(path, checkpoint: Checkpoint, dtype: str = "f8") -> None:
    if dtype not in _DTYPES:
        raise FormatError(f"unsupported payload dtype '{dtype}'")
    entries = []
    payload = bytearray()
    for name, arr, dt in _entries(checkpoint, dtype):
        data = np.ascontiguousarray(arr, dtype=_DTYPES[dt])
        entries.append({"name": name, "shape": list(arr.shape), "dtype": dt,
                        "offset": len(payload)})
        payload.extend(data.tobytes())
    header = {
        "family": checkpoint.family,
        "config_digest": checkpoint.config_digest,
        "config_text": checkpoint.config_text,
        "train_step": checkpoint.train_step,
        "optimizer": {**checkpoint.opt_hyper, "step": checkpoint.opt_step},
        "entries": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(bytes(payload))
    tmp.replace(path)


def checkpoint_load(path, expected_digest: str | None = None) -> Checkpoint:
    """Parse a checkpoint file; never returns partial state on failure."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        raise FormatError("file too short for a checkpoint header")
    magic, version, header_len = _HEAD.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic bytes {magic!r}, expected {MAGIC!r}")
    if version > VERSION:
        raise VersionError(
            f"checkpoint version {version} is newer than supported version {VERSION}")
    body = raw[_HEAD.size:]
    if len(body) < header_len:
        raise IntegrityError("truncated checkpoint: incomplete header")
    try:
        header = json.loads(body[:header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable checkpoint header: {exc}") from None
    payload = body[header_len:]
    digest = header["config_digest"]
    if config_digest(header["config_text"]) != digest:
        raise IntegrityError("config text does not match its recorded digest")
    if expected_digest is not None and digest != expected_digest:
        raise IntegrityError(
            f"config digest mismatch: checkpoint {digest[:12]}..., "
            f"expected {expected_digest[:12]}...")
    params: dict[str, np.ndarray] = {}
    opt_m: dict[str, np.ndarray] = {}
    opt_v: dict[str, np.ndarray] = {}
    running_mean = None
    for entry in header["entries"]:
        dt = _DTYPES.get(entry["dtype"])
        if dt is None:
            raise FormatError(f"unknown entry dtype '{entry['dtype']}'")
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        nbytes = count * np.dtype(dt).itemsize
        if start + nbytes > len(payload):
            raise IntegrityError(
                f"truncated checkpoint: entry '{entry['name']}' extends past payload")
        arr = np.frombuffer(payload, dtype=dt, count=count,
                            offset=start).reshape(shape).astype(np.float64)
        kind, _, name = entry["name"].partition("/")
        if kind == "param":
            params[name] = arr
        elif kind == "adam_m":
            opt_m[name] = arr
        elif kind == "adam_v":
            opt_v[name] = arr
        elif kind == "state" and name == "running_mean":
            running_mean = arr
        else:
            raise FormatError(f"unknown entry kind '{entry['name']}'")
    optimizer = dict(header["optimizer"])
    opt_step = int(optimizer.pop("step", 0))
    return Checkpoint(
        family=header["family"],
        config_text=header["config_text"],
        params=params,
        opt_m=opt_m,
        opt_v=opt_v,
        opt_hyper=optimizer,
        opt_step=opt_step,
        running_mean=running_mean,
        train_step=int(header["train_step"]),
        version=version,
    )
