"""ADIF binary feature-file format.

Layout (all integers little-endian):

    bytes 0-3    magic "ADIF"
    byte  4      version (1)
    byte  5      source code: 0 = mfcc, 1 = pretrained
    bytes 6-7    reserved, zero
    bytes 8-11   u32 feature dimension
    bytes 12-15  u32 frame count
    bytes 16-19  f32 frame shift in ms
    then         frames * dim float32 values, frame-major

The float32 payload round-trips bit-exactly through write/read.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    FileFormatError,
    TruncatedFileError,
    VersionError,
)
from .features import SOURCE_MFCC, SOURCE_PRETRAINED, FeatureMatrix

MAGIC = b"ADIF"
VERSION = 1
_HEADER = struct.Struct("<4sBB2sIIf")

_SOURCE_CODES = {SOURCE_MFCC: 0, SOURCE_PRETRAINED: 1}
_CODE_SOURCES = {v: k for k, v in _SOURCE_CODES.items()}


def write_feature_file(path: str | Path, feat: FeatureMatrix) -> None:
    data = np.ascontiguousarray(feat.data, dtype="<f4")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        _SOURCE_CODES[feat.source],
        b"\x00\x00",
        feat.dim,
        feat.n_frames,
        feat.frame_shift_ms,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_feature_file(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFileError(f"{path}: file shorter than the ADIF header")
        magic, version, source_code, _reserved, dim, frames, shift_ms = _HEADER.unpack(header)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise VersionError(f"{path}: unsupported ADIF version {version}")
        if source_code not in _CODE_SOURCES:
            raise FileFormatError(f"{path}: unknown source code {source_code}")
        expected = dim * frames * 4
        payload = fh.read(expected)
        if len(payload) < expected:
            raise TruncatedFileError(
                f"{path}: payload has {len(payload)} bytes, header promises {expected}"
            )
        if fh.read(1):
            raise FileFormatError(f"{path}: trailing bytes after the feature payload")

    data = np.frombuffer(payload, dtype="<f4").reshape(frames, dim)
    return FeatureMatrix(data, float(shift_ms), _CODE_SOURCES[source_code])
