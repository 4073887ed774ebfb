"""Solver state container for resuming a homotopy in another process.

Layout: the 8-byte magic ``L1HSTATE``, a little-endian uint64 section
count, then one table entry per section (16-byte NUL-padded name, uint64
offset, uint64 length), then the sections.  Every section is a matrix in
the binary matrix layout.  Index and sign lists are stored as one row
whose first entry is the list length, so empty lists still round-trip.
"""
import struct

import numpy as np

from .bpdn import BpdnState
from .dantzig import DsState
from .errors import FormatError
from .homotopy import ActiveSet
from .linalg import ExplicitInverse
from .matio import atomic_write, pack_matrix, unpack_matrix
from .operators import CountingMatrix

MAGIC = b"L1HSTATE"
_COUNT = struct.Struct("<Q")
_ENTRY = struct.Struct("<16sQQ")
KINDS = ("bpdn", "ds")


def pack_sections(sections):
    blobs = [(name.encode("ascii"), pack_matrix(M)) for name, M in sections.items()]
    head = len(MAGIC) + _COUNT.size + _ENTRY.size * len(blobs)
    table, off = [], head
    for name, blob in blobs:
        if len(name) > 16:
            raise FormatError(f"section name {name!r} is too long")
        table.append(_ENTRY.pack(name, off, len(blob)))
        off += len(blob)
    return MAGIC + _COUNT.pack(len(blobs)) + b"".join(table) + b"".join(b for _, b in blobs)


def unpack_sections(buf):
    if buf[:len(MAGIC)] != MAGIC:
        raise FormatError("not a state file (bad magic)")
    if len(buf) < len(MAGIC) + _COUNT.size:
        raise FormatError("truncated state header")
    (count,) = _COUNT.unpack_from(buf, len(MAGIC))
    pos = len(MAGIC) + _COUNT.size
    if len(buf) < pos + count * _ENTRY.size:
        raise FormatError("truncated section table")
    out = {}
    for k in range(count):
        name, off, length = _ENTRY.unpack_from(buf, pos + k * _ENTRY.size)
        M, end = unpack_matrix(buf[:off + length], off)
        if end != off + length:
            raise FormatError(f"section {name!r} has the wrong length")
        out[name.rstrip(b"\0").decode("ascii")] = M
    return out


def _list(vals):
    return np.array([[len(vals)] + [float(v) for v in vals]])


def _unlist(M):
    row = M.reshape(-1)
    k = int(row[0])
    if k != row.size - 1:
        raise FormatError("index list length does not match its header")
    return [int(v) for v in row[1:]]


def save_state(path, A, y, state):
    """Write the problem ``(A, y)`` and a BPDN or DS state atomically.

    Saved states are always end points of a homotopy, so ``eps`` is 1.
    """
    ds = isinstance(state, DsState)
    sec = {
        "kind": np.array([[float(ds)]]),
        "A": np.asarray(getattr(A, "A", A), dtype=float),
        "y": np.asarray(y, dtype=float).reshape(1, -1),
        "x": state.x.reshape(1, -1),
        "tau": np.array([[state.tau]]),
        "eps": np.array([[1.0]]),
    }
    if ds:
        sec.update({"lam": state.lam.reshape(1, -1), "gx": _list(state.Gx), "gl": _list(state.Gl),
                    "zx": _list(state.zx), "zl": _list(state.zl)})
    else:
        sec.update({"support": _list(state.active.indices), "signs": _list(state.active.signs)})
    atomic_write(path, pack_sections(sec))


def load_state(path):
    """Returns ``(kind, A, y, state)`` with the factorizations rebuilt."""
    with open(path, "rb") as fh:
        sec = unpack_sections(fh.read())
    try:
        kind = KINDS[int(sec["kind"][0, 0])]
        A, y, x, tau = sec["A"], sec["y"].reshape(-1), sec["x"].reshape(-1), float(sec["tau"][0, 0])
    except (KeyError, IndexError) as exc:
        raise FormatError(f"state file lacks {exc}") from None
    m, n = A.shape
    if y.size != m or x.size != n:
        raise FormatError("state vectors do not match the matrix shape")
    op = CountingMatrix(A)
    p = op.rmatvec(op.matvec(x) - y)
    if kind == "bpdn":
        idx, z = _unlist(sec["support"]), _unlist(sec["signs"])
        if len(idx) != len(z):
            raise FormatError("support and signs differ in length")
        return kind, A, y, BpdnState(x, tau, ActiveSet(op.gram_block, idx, z), p)
    lam = sec["lam"].reshape(-1)
    Gx, Gl, zx, zl = (_unlist(sec[k]) for k in ("gx", "gl", "zx", "zl"))
    if not len(Gx) == len(Gl) == len(zx) == len(zl):
        raise FormatError("DS supports differ in length")
    inv = ExplicitInverse(op.gram_block(Gl, Gx) if Gl else np.zeros((0, 0)))
    return kind, A, y, DsState(x, lam, tau, Gx, Gl, zx, zl, inv, p, op.gram(lam))
