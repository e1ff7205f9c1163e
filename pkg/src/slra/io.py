"""Matrix file formats.

Two formats are supported:

* Matrix Market (``array`` or ``coordinate``, real/integer fields), the
  default text format.
* A raw binary format: the magic bytes ``b"SLRA"``, a little-endian ``u16``
  version (currently 1), ``u32`` rows, ``u32`` cols, then ``rows * cols``
  little-endian float64 values in row-major order.

Both readers reject non-finite values.  :func:`read_matrix` auto-detects the
format from the magic bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .exceptions import InvalidArgumentError

MAGIC = b"SLRA"
VERSION = 1
_HEADER = struct.Struct("<4sHII")


def write_binary(path, M) -> None:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidArgumentError("only 2-D matrices can be written")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("refusing to write non-finite values")
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rows, cols))
        fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())


def read_binary(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InvalidArgumentError(f"{path}: truncated header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidArgumentError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise InvalidArgumentError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise InvalidArgumentError(
            f"{path}: expected {expected} bytes for a {rows}x{cols} matrix, got {len(data)}"
        )
    M = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    M = M.astype(np.float64)
    _reject_nonfinite(M, path)
    return M


def read_matrix_market(path) -> np.ndarray:
    try:
        M = scipy.io.mmread(str(path))
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from exc
    if scipy.sparse.issparse(M):
        M = M.toarray()
    M = np.asarray(M)
    if np.iscomplexobj(M):
        raise InvalidArgumentError(f"{path}: complex matrices are not supported")
    M = M.astype(np.float64)
    if M.ndim != 2:
        raise InvalidArgumentError(f"{path}: not a matrix")
    _reject_nonfinite(M, path)
    return M


def write_matrix_market(path, M) -> None:
    scipy.io.mmwrite(str(path), np.asarray(M, dtype=np.float64))


def read_matrix(path) -> np.ndarray:
    """Read either format, choosing by the leading magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return read_binary(path)
    return read_matrix_market(path)


def _reject_nonfinite(M, path):
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError(f"{path}: matrix contains non-finite values")
