"""Binary checkpoint container.

Layout, little-endian throughout:

    bytes 0..3   magic b"ADCK"
    byte  4      format version (currently 1)
    bytes 5..7   reserved, zero
    bytes 8..11  u32 header length in bytes
    ...          UTF-8 JSON header (sorted keys, no whitespace)
    ...          concatenated float32 tensors in header order

The header carries kind, model config, epoch, optimizer step count, rng
state, and an "arrays" list naming each payload tensor with its role
(param / buffer / opt_m / opt_v) and shape. Arrays are written grouped by
role and sorted by name inside each group, so serialization is canonical:
save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (
    BadMagicError,
    ConfigurationError,
    FileFormatError,
    KindMismatchError,
    TruncatedFileError,
    VersionError,
)
from ..models import Model, build_ecapa, build_resnet34, EcapaConfig, ResNetConfig
from .optimizer import Adam

CHECKPOINT_MAGIC = b"ADCK"
CHECKPOINT_VERSION = 1
_PREFIX = struct.Struct("<4sB3xI")

_ROLES = ("param", "buffer", "opt_m", "opt_v")


@dataclass
class Checkpoint:
    kind: str
    config: dict
    epoch: int
    params: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    opt_t: int | None = None
    opt_m: dict[str, np.ndarray] | None = None
    opt_v: dict[str, np.ndarray] | None = None
    rng_state: dict | None = None


def checkpoint_from_model(
    model: Model,
    epoch: int = 0,
    optimizer: Adam | None = None,
    rng: np.random.Generator | None = None,
) -> Checkpoint:
    params = {name: p.value.astype(np.float32, copy=True) for name, p in model.named_parameters()}
    buffers = {name: b.astype(np.float32, copy=True) for name, b in model.named_buffers()}
    ckpt = Checkpoint(kind=model.kind, config=asdict(model.cfg), epoch=epoch, params=params, buffers=buffers)
    if optimizer is not None:
        state = optimizer.state_dict()
        ckpt.opt_t = state["t"]
        ckpt.opt_m = state["m"]
        ckpt.opt_v = state["v"]
    if rng is not None:
        ckpt.rng_state = rng.bit_generator.state
    return ckpt


def _array_groups(ckpt: Checkpoint):
    groups = {"param": ckpt.params, "buffer": ckpt.buffers}
    if ckpt.opt_m is not None:
        groups["opt_m"] = ckpt.opt_m
        groups["opt_v"] = ckpt.opt_v or {}
    for role in _ROLES:
        table = groups.get(role)
        if table is None:
            continue
        for name in sorted(table):
            yield role, name, table[name]


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    arrays = []
    payload = []
    for role, name, arr in _array_groups(ckpt):
        arr32 = np.ascontiguousarray(arr, dtype=np.float32)
        arrays.append({"name": name, "role": role, "shape": list(arr32.shape)})
        payload.append(arr32.tobytes())
    header = {
        "arrays": arrays,
        "config": ckpt.config,
        "epoch": int(ckpt.epoch),
        "kind": ckpt.kind,
        "opt_t": None if ckpt.opt_t is None else int(ckpt.opt_t),
        "rng_state": ckpt.rng_state,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for chunk in payload:
            fh.write(chunk)


def load_checkpoint(path) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise TruncatedFileError(f"{path}: file shorter than the fixed prefix")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(f"{path}: expected magic {CHECKPOINT_MAGIC!r}, got {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise VersionError(f"{path}: unsupported checkpoint version {version}")
    header_end = _PREFIX.size + header_len
    if len(data) < header_end:
        raise TruncatedFileError(f"{path}: header extends past end of file")
    try:
        header = json.loads(data[_PREFIX.size : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: bad header JSON: {exc}") from exc

    tables: dict[str, dict[str, np.ndarray]] = {role: {} for role in _ROLES}
    offset = header_end
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        n_bytes = 4 * int(np.prod(shape, dtype=np.int64)) if shape else 4
        if offset + n_bytes > len(data):
            raise TruncatedFileError(
                f"{path}: payload for {entry['name']!r} extends past end of file"
            )
        arr = np.frombuffer(data, dtype="<f4", count=n_bytes // 4, offset=offset)
        tables[entry["role"]][entry["name"]] = arr.reshape(shape).copy()
        offset += n_bytes
    if offset != len(data):
        raise FileFormatError(f"{path}: {len(data) - offset} trailing bytes after payload")

    has_opt = header["opt_t"] is not None
    return Checkpoint(
        kind=header["kind"],
        config=header["config"],
        epoch=int(header["epoch"]),
        params=tables["param"],
        buffers=tables["buffer"],
        opt_t=int(header["opt_t"]) if has_opt else None,
        opt_m=tables["opt_m"] if has_opt else None,
        opt_v=tables["opt_v"] if has_opt else None,
        rng_state=header["rng_state"],
    )


def restore_model(model: Model, ckpt: Checkpoint) -> Model:
    """Copy checkpoint parameters and buffers into an existing model."""
    if model.kind != ckpt.kind:
        raise KindMismatchError(
            f"checkpoint holds a {ckpt.kind!r} model, target is {model.kind!r}"
        )
    live = dict(model.named_parameters())
    if set(live) != set(ckpt.params):
        missing = set(live) ^ set(ckpt.params)
        raise FileFormatError(f"parameter name mismatch, differing names: {sorted(missing)}")
    for name, p in live.items():
        arr = ckpt.params[name]
        if arr.shape != p.value.shape:
            raise FileFormatError(
                f"shape mismatch for {name!r}: checkpoint {arr.shape}, model {p.value.shape}"
            )
        p.value[...] = arr
    live_buffers = dict(model.named_buffers())
    if set(live_buffers) != set(ckpt.buffers):
        missing = set(live_buffers) ^ set(ckpt.buffers)
        raise FileFormatError(f"buffer name mismatch, differing names: {sorted(missing)}")
    for name, arr in ckpt.buffers.items():
        mod_path, _, leaf = name.rpartition(".")
        model.submodule(mod_path).set_buffer(leaf, arr.astype(np.float32, copy=True))
    return model


_BUILDERS = {
    "resnet34": (ResNetConfig, build_resnet34),
    "ecapa": (EcapaConfig, build_ecapa),
}


def model_from_checkpoint(ckpt: Checkpoint) -> Model:
    """Build a fresh model of the checkpointed kind and load its state."""
    try:
        config_cls, builder = _BUILDERS[ckpt.kind]
    except KeyError:
        raise ConfigurationError(f"unknown model kind {ckpt.kind!r}") from None
    cfg = config_cls(**ckpt.config)
    model = builder(cfg, seed=0)
    return restore_model(model, ckpt)


def restore_optimizer(optimizer: Adam, ckpt: Checkpoint) -> Adam:
    if ckpt.opt_t is None:
        raise ConfigurationError("checkpoint carries no optimizer state")
    optimizer.load_state_dict({"t": ckpt.opt_t, "m": ckpt.opt_m, "v": ckpt.opt_v})
    return optimizer


def rng_from_checkpoint(ckpt: Checkpoint) -> np.random.Generator:
    if ckpt.rng_state is None:
        raise ConfigurationError("checkpoint carries no rng state")
    rng = np.random.default_rng()
    rng.bit_generator.state = ckpt.rng_state
    return rng
