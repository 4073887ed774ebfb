"""Matrix file formats.

CSV: one matrix row per line.  Binary: the 8-byte magic ``L1HMAT00``, then
rows and cols as little-endian uint64, then the entries as little-endian
float64 in row-major order.
"""
import os
import struct
import tempfile

import numpy as np

from .errors import FormatError

MAGIC = b"L1HMAT00"
_HEADER = struct.Struct("<8sQQ")


def check_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise FormatError("matrix must be 2-D with at least one row and column")
    if not np.all(np.isfinite(M)):
        raise FormatError("matrix has non-finite entries")
    return M


def pack_matrix(M):
    M = check_matrix(M)
    r, c = M.shape
    return _HEADER.pack(MAGIC, r, c) + np.ascontiguousarray(M, dtype="<f8").tobytes()


def unpack_matrix(buf, offset=0):
    """Parse one matrix starting at ``offset``; returns ``(matrix, next_offset)``."""
    if len(buf) - offset < _HEADER.size:
        raise FormatError("truncated matrix header")
    magic, r, c = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise FormatError("bad magic")
    start = offset + _HEADER.size
    end = start + 8 * r * c
    if end > len(buf):
        raise FormatError("truncated matrix data")
    M = np.frombuffer(buf, dtype="<f8", count=r * c, offset=start).astype(float).reshape(r, c)
    return M, end


def atomic_write(path, data, mode="wb"):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_binary(path, M):
    atomic_write(path, pack_matrix(M))


def read_binary(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    M, end = unpack_matrix(buf)
    if end != len(buf):
        raise FormatError("trailing bytes after matrix")
    return M


def write_csv(path, M):
    M = check_matrix(M)
    lines = [",".join(repr(float(v)) for v in row) for row in M]
    atomic_write(path, "\n".join(lines) + "\n", mode="w")


def read_csv(path):
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    return check_matrix(M)


def read_matrix(path):
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return read_binary(path)
    return read_csv(path)


def write_matrix(path, M):
    if str(path).endswith(".csv"):
        write_csv(path, M)
    else:
        write_binary(path, M)


def read_vector(path):
    return read_matrix(path).reshape(-1)
