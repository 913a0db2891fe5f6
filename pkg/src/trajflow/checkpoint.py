"""Binary checkpoints.

Layout::

    magic (8 bytes) | version (u32 LE) | header length (u64 LE) | header JSON
    | float64 LE blobs in header order | CRC32 of everything before it (u32 LE)

The header is canonical JSON (sorted keys, no spaces), so saving a loaded
checkpoint reproduces the original bytes.
"""

import json
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass, field

import numpy as np

from .ddpm import DiffusionNet, make_baseline
from .domains.norm import NormStats
from .errors import ChecksumError, ConfigError, DataError, IoError, SchemaError
from .vfnet import NetConfig, VectorFieldNet

MAGIC = b"TFLOWCK\x00"
VERSION = 1
FAMILIES = ("tcfm", "ddpm")


@dataclass
class Checkpoint:
    family: str
    net_config: NetConfig
    params: dict
    run_config: dict = field(default_factory=dict)
    norm: dict = field(default_factory=dict)
    step: int = 0
    moments: dict = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"model family must be one of {FAMILIES}, got {self.family!r}")

    def model(self):
        net = VectorFieldNet(self.net_config, self.params)
        if self.family == "ddpm":
            return make_baseline(net, int(self.extra.get("diffusion_steps", 64)))
        return net

    @classmethod
    def from_model(cls, model, **kw):
        if isinstance(model, DiffusionNet):
            extra = dict(kw.pop("extra", {}))
            extra["diffusion_steps"] = model.schedule.num_steps
            return cls("ddpm", model.config, dict(model.params), extra=extra, **kw)
        return cls("tcfm", model.config, dict(model.params), **kw)

    def __eq__(self, other):
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return to_bytes(self) == to_bytes(other)


def _blobs(ckpt):
    groups = [("params", ckpt.params)]
    if ckpt.moments is not None:
        groups += [("m", ckpt.moments["m"]), ("v", ckpt.moments["v"])]
    for group, arrays in groups:
        for name in sorted(arrays):
            yield group, name, np.ascontiguousarray(arrays[name], dtype="<f8")


def to_bytes(ckpt):
    entries = []
    payload = []
    offset = 0
    for group, name, arr in _blobs(ckpt):
        raw = arr.tobytes()
        entries.append({"group": group, "name": name, "shape": list(arr.shape), "offset": offset})
        payload.append(raw)
        offset += len(raw)
    header = {
        "family": ckpt.family,
        "net_config": ckpt.net_config.to_dict(),
        "run_config": ckpt.run_config,
        "norm": {k: v.to_dict() for k, v in sorted(ckpt.norm.items())},
        "step": int(ckpt.step),
        "has_moments": ckpt.moments is not None,
        "extra": ckpt.extra,
        "blobs": entries,
    }
    hjson = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")
    body = MAGIC + struct.pack("<IQ", VERSION, len(hjson)) + hjson + b"".join(payload)
    return body + struct.pack("<I", zlib.crc32(body))


def from_bytes(data):
    if len(data) < len(MAGIC) + 16 or data[: len(MAGIC)] != MAGIC:
        raise DataError("not a checkpoint file")
    (crc,) = struct.unpack("<I", data[-4:])
    body = data[:-4]
    if zlib.crc32(body) != crc:
        raise ChecksumError("checkpoint checksum mismatch; file is corrupted")
    version, hlen = struct.unpack("<IQ", body[len(MAGIC) : len(MAGIC) + 12])
    if version != VERSION:
        raise SchemaError(f"checkpoint format version {version} is not supported (expected {VERSION})")
    start = len(MAGIC) + 12
    header = json.loads(body[start : start + hlen].decode("utf-8"))
    blob_base = start + hlen
    groups = {"params": {}, "m": {}, "v": {}}
    for e in header["blobs"]:
        count = int(np.prod(e["shape"], dtype=np.int64))
        lo = blob_base + e["offset"]
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=lo).astype(np.float64).reshape(e["shape"])
        groups[e["group"]][e["name"]] = arr
    moments = {"m": groups["m"], "v": groups["v"]} if header["has_moments"] else None
    return Checkpoint(
        family=header["family"],
        net_config=NetConfig.from_dict(header["net_config"]),
        params=groups["params"],
        run_config=header["run_config"],
        norm={k: NormStats.from_dict(v) for k, v in header["norm"].items()},
        step=header["step"],
        moments=moments,
        extra=header["extra"],
    )


def save(path, ckpt):
    """Write atomically; unwritable locations raise IoError."""
    data = to_bytes(ckpt)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def load(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    return from_bytes(data)
