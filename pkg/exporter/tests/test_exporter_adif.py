import struct

import numpy as np
import pytest

from adif_exporter.adif import (
    _HEADER,
    EXPECTED_DIM,
    read_adif,
    verify_adif,
    write_adif,
)

rng = np.random.default_rng(11)


def sample_file(path, frames=7, dim=EXPECTED_DIM, shift=20.0):
    data = rng.normal(size=(frames, dim)).astype(np.float32)
    write_adif(path, data, shift)
    return data


def test_round_trip(tmp_path):
    target = tmp_path / "u.adif"
    data = sample_file(target, frames=5)
    back, shift = read_adif(target)
    assert shift == 20.0
    np.testing.assert_array_equal(back, data)
    assert back.dtype == np.float32


def test_rewrite_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.adif", tmp_path / "b.adif"
    data = rng.normal(size=(9, EXPECTED_DIM)).astype(np.float32)
    write_adif(a, data, 20.0)
    write_adif(b, data, 20.0)
    assert a.read_bytes() == b.read_bytes()


def test_write_rejects_bad_shapes(tmp_path):
    with pytest.raises(ValueError):
        write_adif(tmp_path / "x.adif", np.zeros(8, dtype=np.float32), 20.0)
    with pytest.raises(ValueError):
        write_adif(tmp_path / "x.adif", np.zeros((0, 4), dtype=np.float32), 20.0)


def test_write_rejects_nan(tmp_path):
    data = np.zeros((3, 4), dtype=np.float32)
    data[1, 2] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        write_adif(tmp_path / "x.adif", data, 20.0)


class TestVerify:
    def test_good_file(self, tmp_path):
        target = tmp_path / "ok.adif"
        sample_file(target)
        result = verify_adif(target)
        assert result
        assert result.ok and result.reason is None

    def test_unreadable(self, tmp_path):
        result = verify_adif(tmp_path / "missing.adif")
        assert not result
        assert result.reason == "unreadable"

    def test_bad_magic(self, tmp_path):
        target = tmp_path / "m.adif"
        sample_file(target)
        raw = bytearray(target.read_bytes())
        raw[0:4] = b"XDIF"
        target.write_bytes(raw)
        assert verify_adif(target).reason == "magic"

    def test_bad_version(self, tmp_path):
        target = tmp_path / "v.adif"
        sample_file(target)
        raw = bytearray(target.read_bytes())
        raw[4] = 9
        target.write_bytes(raw)
        assert verify_adif(target).reason == "version"

    def test_bad_source(self, tmp_path):
        target = tmp_path / "s.adif"
        sample_file(target)
        raw = bytearray(target.read_bytes())
        raw[5] = 0  # the core toolkit's MFCC code; this tool only emits pretrained
        target.write_bytes(raw)
        assert verify_adif(target).reason == "source"

    def test_wrong_dim(self, tmp_path):
        target = tmp_path / "d.adif"
        sample_file(target, dim=80)
        assert verify_adif(target).reason == "dim"
        assert verify_adif(target, expected_dim=80)

    def test_truncated_header(self, tmp_path):
        target = tmp_path / "th.adif"
        sample_file(target)
        target.write_bytes(target.read_bytes()[: _HEADER.size - 3])
        assert verify_adif(target).reason == "truncated"

    def test_truncated_payload(self, tmp_path):
        target = tmp_path / "tp.adif"
        sample_file(target)
        target.write_bytes(target.read_bytes()[:-2])
        assert verify_adif(target).reason == "truncated"

    def test_trailing_bytes(self, tmp_path):
        target = tmp_path / "tr.adif"
        sample_file(target)
        target.write_bytes(target.read_bytes() + b"\x00")
        assert verify_adif(target).reason == "trailing"

    def test_nan_payload(self, tmp_path):
        target = tmp_path / "n.adif"
        sample_file(target, frames=2)
        raw = bytearray(target.read_bytes())
        raw[_HEADER.size : _HEADER.size + 4] = struct.pack("<f", float("nan"))
        target.write_bytes(raw)
        assert verify_adif(target).reason == "non-finite"

    def test_zero_frames(self, tmp_path):
        target = tmp_path / "z.adif"
        header = _HEADER.pack(b"ADIF", 1, 1, b"\x00\x00", EXPECTED_DIM, 0, 20.0)
        target.write_bytes(header)
        assert verify_adif(target).reason == "empty"


def test_read_rejects_corrupt(tmp_path):
    target = tmp_path / "bad.adif"
    target.write_bytes(b"not a feature file, padded past the header size")
    with pytest.raises(ValueError, match="magic"):
        read_adif(target)
