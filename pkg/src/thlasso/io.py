"""CSV and binary (``THLX1``) serialization for matrices and signals.

Binary layout, all little-endian::

    b"THLX1"            magic (5 bytes)
    u64                 ndim (1 = signal, 2 = matrix)
    u64 * ndim          dimensions
    f64 * prod(dims)    values, row-major
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .core import DesignMatrix, Signal, ThlassoError, as_matrix, as_vector

MAGIC = b"THLX1"


class FormatError(ThlassoError):
    pass


def write_matrix_csv(X, path) -> None:
    np.savetxt(path, as_matrix(X), delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> DesignMatrix:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return DesignMatrix(data)


def write_signal_csv(beta, path) -> None:
    coef = as_vector(beta)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "value"])
        for j, v in enumerate(coef, start=1):
            w.writerow([j, repr(float(v))])


def read_signal_csv(path) -> Signal:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["j", "value"]:
        raise FormatError(f"{path}: expected header 'j,value'")
    body = [r for r in rows[1:] if r]
    idx = np.array([int(r[0]) for r in body])
    if body and not np.array_equal(idx, np.arange(1, len(body) + 1)):
        raise FormatError(f"{path}: indices must run 1..p in order")
    return Signal(np.array([float(r[1]) for r in body]))


def to_bytes(arr) -> bytes:
    a = np.ascontiguousarray(arr, dtype="<f8")
    if a.ndim not in (1, 2):
        raise FormatError("only vectors and matrices can be serialized")
    head = MAGIC + struct.pack("<Q", a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + a.tobytes(order="C")


def from_bytes(buf: bytes) -> np.ndarray:
    if buf[:5] != MAGIC:
        raise FormatError("bad magic; not a THLX1 container")
    (ndim,) = struct.unpack_from("<Q", buf, 5)
    if ndim not in (1, 2):
        raise FormatError(f"unsupported ndim {ndim}")
    shape = struct.unpack_from(f"<{ndim}Q", buf, 13)
    offset = 13 + 8 * ndim
    count = int(np.prod(shape))
    if len(buf) - offset != 8 * count:
        raise FormatError("payload length does not match dimensions")
    return np.frombuffer(buf, dtype="<f8", count=count, offset=offset).reshape(shape).astype(float)


def write_binary(obj, path) -> None:
    arr = as_matrix(obj) if isinstance(obj, DesignMatrix) else (
        as_vector(obj) if isinstance(obj, Signal) else np.asarray(obj, dtype=float))
    Path(path).write_bytes(to_bytes(arr))


def read_binary(path):
    arr = from_bytes(Path(path).read_bytes())
    return DesignMatrix(arr) if arr.ndim == 2 else Signal(arr)


def load_matrix(path) -> DesignMatrix:
    """Read a matrix from ``.csv`` or a THLX1 container (any other suffix)."""
    if str(path).endswith(".csv"):
        return read_matrix_csv(path)
    obj = read_binary(path)
    if not isinstance(obj, DesignMatrix):
        raise FormatError(f"{path} holds a vector, expected a matrix")
    return obj


def load_signal(path) -> Signal:
    if str(path).endswith(".csv"):
        with open(path) as fh:
            first = fh.readline()
        if first.strip().replace(" ", "") == "j,value":
            return read_signal_csv(path)
        return Signal(np.loadtxt(path, delimiter=",").ravel())
    obj = read_binary(path)
    if isinstance(obj, DesignMatrix):
        return Signal(obj.data.ravel())
    return obj


def save(obj, path) -> None:
    """Write ``obj`` choosing the format from the file suffix."""
    if str(path).endswith(".csv"):
        if isinstance(obj, DesignMatrix) or np.ndim(obj) == 2:
            write_matrix_csv(obj, path)
        else:
            write_signal_csv(obj, path)
    else:
        write_binary(obj, path)


def csv_text(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
