"""Binary matrix/vector files and CSV amplitude export.

Layout (little-endian)::

    magic     8 bytes   b"GPSMAT01" (matrix) or b"GPSVEC01" (vector)
    rows      u64
    cols      u64       (1 for vectors)
    field     u8        0 = real, 1 = complex
    payload   rows*cols float64 in row-major order; complex entries are
              stored as interleaved (re, im) pairs

Sampling matrices are stored as ``A`` (``n x m``, column ``i`` = ``a_i``).
"""
import csv
import struct

import numpy as np

from gpspr.errors import FileFormatError, MagicMismatchError, TruncatedPayloadError

MATRIX_MAGIC = b"GPSMAT01"
VECTOR_MAGIC = b"GPSVEC01"
_HEADER = struct.Struct("<QQB")


def _write(path, magic, arr):
    arr = np.asarray(arr)
    is_complex = np.iscomplexobj(arr)
    rows, cols = arr.shape
    if is_complex:
        payload = np.ascontiguousarray(arr, dtype="<c16")
    else:
        payload = np.ascontiguousarray(arr, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(_HEADER.pack(rows, cols, 1 if is_complex else 0))
        fh.write(payload.tobytes(order="C"))


def _read(path, magic):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(magic):
        raise TruncatedPayloadError(f"{path}: file too short for magic bytes")
    if data[: len(magic)] != magic:
        raise MagicMismatchError(f"{path}: expected magic {magic!r}, found {data[:len(magic)]!r}")
    head_end = len(magic) + _HEADER.size
    if len(data) < head_end:
        raise TruncatedPayloadError(f"{path}: truncated header")
    rows, cols, flag = _HEADER.unpack_from(data, len(magic))
    if flag not in (0, 1):
        raise FileFormatError(f"{path}: invalid field flag {flag}")
    dtype = np.dtype("<c16") if flag else np.dtype("<f8")
    expected = rows * cols * dtype.itemsize
    body = data[head_end:]
    if len(body) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(body)} bytes, header declares {expected}"
        )
    if len(body) > expected:
        raise FileFormatError(f"{path}: {len(body) - expected} trailing bytes")
    arr = np.frombuffer(body, dtype=dtype).reshape(rows, cols)
    return arr.astype(np.complex128 if flag else np.float64)


def save_matrix(path, a):
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError("save_matrix expects a 2-D array")
    _write(path, MATRIX_MAGIC, a)


def load_matrix(path):
    return _read(path, MATRIX_MAGIC)


def save_vector(path, v):
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("save_vector expects a 1-D array")
    _write(path, VECTOR_MAGIC, v.reshape(-1, 1))


def load_vector(path):
    return _read(path, VECTOR_MAGIC)[:, 0].copy()


def write_amplitudes_csv(path, b):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "value"])
        for i, v in enumerate(np.asarray(b, dtype=float)):
            writer.writerow([i, repr(float(v))])


def read_amplitudes_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["index", "value"]:
            raise FileFormatError(f"{path}: unexpected header {header}")
        return np.array([float(row[1]) for row in reader])
