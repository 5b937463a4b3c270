"""Standalone ADIF writer and validator.

This tool talks to the core toolkit only through files, so it carries its
own copy of the format instead of importing the core's codec. Layout
(little-endian): magic "ADIF", u8 version, u8 source code (1 = pretrained),
two reserved zero bytes, u32 dim, u32 frame count, f32 frame shift in ms,
then frame-major float32 data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"ADIF"
VERSION = 1
SOURCE_PRETRAINED = 1

_HEADER = struct.Struct("<4sBB2sIIf")

EXPECTED_DIM = 1024


def write_adif(path, data: np.ndarray, frame_shift_ms: float) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"expected a non-empty (frames, dim) array, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to write non-finite feature values")
    header = _HEADER.pack(
        MAGIC, VERSION, SOURCE_PRETRAINED, b"\x00\x00",
        data.shape[1], data.shape[0], frame_shift_ms,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_adif(path) -> tuple[np.ndarray, float]:
    """Load a file this tool wrote; returns (features, frame_shift_ms)."""
    check = verify_adif(path, expected_dim=None)
    if not check:
        raise ValueError(f"{path}: invalid ADIF file ({check.reason})")
    raw = Path(path).read_bytes()
    _, _, _, _, dim, frames, shift = _HEADER.unpack_from(raw)
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(frames, dim)
    return data.copy(), shift


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_adif(path, expected_dim: int | None = EXPECTED_DIM) -> VerifyResult:
    """Check magic, version, source, dimension, payload size, finiteness.

    Returns a truthy result on success, otherwise the first violation as a
    short reason string ("magic", "version", "source", "dim", "empty",
    "truncated", "non-finite", "trailing"). ``expected_dim=None`` skips the
    dimension check.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError:
        return VerifyResult(False, "unreadable")
    if len(raw) < _HEADER.size:
        return VerifyResult(False, "truncated")
    magic, version, source, _reserved, dim, frames, _shift = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        return VerifyResult(False, "magic")
    if version != VERSION:
        return VerifyResult(False, "version")
    if source != SOURCE_PRETRAINED:
        return VerifyResult(False, "source")
    if expected_dim is not None and dim != expected_dim:
        return VerifyResult(False, "dim")
    if dim < 1 or frames < 1:
        return VerifyResult(False, "empty")
    expected = _HEADER.size + 4 * dim * frames
    if len(raw) < expected:
        return VerifyResult(False, "truncated")
    if len(raw) > expected:
        return VerifyResult(False, "trailing")
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if not np.all(np.isfinite(values)):
        return VerifyResult(False, "non-finite")
    return VerifyResult(True)
