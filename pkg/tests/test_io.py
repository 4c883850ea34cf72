import numpy as np
import pytest

from gpspr import io
from gpspr.errors import FileFormatError, MagicMismatchError, TruncatedPayloadError


def test_matrix_round_trip(tmp_path, rng):
    a = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    path = tmp_path / "a.gpsmat"
    io.save_matrix(path, a)
    b = io.load_matrix(path)
    assert b.dtype == np.complex128 and np.array_equal(a, b)
    assert path.stat().st_size == 8 + 17 + 15 * 16


def test_real_vector_round_trip(tmp_path, rng):
    v = rng.standard_normal(7)
    io.save_vector(tmp_path / "v", v)
    w = io.load_vector(tmp_path / "v")
    assert w.dtype == np.float64 and np.array_equal(v, w)


def test_header_layout(tmp_path):
    io.save_vector(tmp_path / "v", np.array([1.0, 2.0]))
    raw = (tmp_path / "v").read_bytes()
    assert raw[:8] == b"GPSVEC01"
    assert int.from_bytes(raw[8:16], "little") == 2
    assert int.from_bytes(raw[16:24], "little") == 1
    assert raw[24] == 0
    assert np.frombuffer(raw[25:], "<f8").tolist() == [1.0, 2.0]


def test_errors_are_distinct(tmp_path):
    path = tmp_path / "a"
    io.save_matrix(path, np.eye(2))
    raw = path.read_bytes()
    path.write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(MagicMismatchError):
        io.load_matrix(path)
    path.write_bytes(raw[:-3])
    with pytest.raises(TruncatedPayloadError):
        io.load_matrix(path)
    path.write_bytes(raw[:12])
    with pytest.raises(TruncatedPayloadError):
        io.load_matrix(path)
    path.write_bytes(raw + b"\0")
    with pytest.raises(FileFormatError):
        io.load_matrix(path)
    io.save_vector(path, np.ones(2))
    with pytest.raises(MagicMismatchError):
        io.load_matrix(path)


def test_amplitude_csv(tmp_path):
    b = np.array([0.5, 1.25, 3.0])
    io.write_amplitudes_csv(tmp_path / "b.csv", b)
    assert (tmp_path / "b.csv").read_text().splitlines()[0] == "index,value"
    assert np.array_equal(io.read_amplitudes_csv(tmp_path / "b.csv"), b)
