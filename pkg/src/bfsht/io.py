"""Binary file formats for coefficient sets and grid values.

Both formats share a 16-byte header: 4-byte magic, u32 version, u32 N, u32
dtype code (0 = complex128, 1 = complex64), little-endian.  Payloads follow
immediately:

  coefficients (magic "SHTC"): per-order arrays for m = -(2N-1) .. 2N-1
  ascending, each with its 2N-|m| values in ascending degree k;

  grid values (magic "SHTG"): f(theta_l, phi_j) row-major, theta-major,
  shape 2N x (4N-1).

Malformed input raises ValueError naming the byte offset of the problem.
"""
import struct

import numpy as np

from .sht import ShtCoeffs, ShtGridValues

__all__ = ["save_coeffs", "load_coeffs", "save_grid", "load_grid"]

_MAGIC_COEFFS = b"SHTC"
_MAGIC_GRID = b"SHTG"
_VERSION = 1
_DTYPES = {0: np.dtype("<c16"), 1: np.dtype("<c8")}
_CODES = {np.dtype(np.complex128): 0, np.dtype(np.complex64): 1}


def _write_header(fh, magic, n, dtype):
    code = _CODES.get(np.dtype(dtype))
    if code is None:
        raise ValueError(f"unsupported dtype {dtype}; use complex128 or complex64")
    fh.write(magic)
    fh.write(struct.pack("<III", _VERSION, n, code))


def _read_header(fh, magic):
    got = fh.read(4)
    if got != magic:
        raise ValueError(f"bad magic {got!r} at offset 0, expected {magic!r}")
    raw = fh.read(12)
    if len(raw) < 12:
        raise ValueError(f"truncated header at offset {4 + len(raw)}")
    ver, n, code = struct.unpack("<III", raw)
    if ver != _VERSION:
        raise ValueError(f"unsupported version {ver} at offset 4")
    if code not in _DTYPES:
        raise ValueError(f"unknown dtype code {code} at offset 12")
    if n < 1:
        raise ValueError(f"invalid N={n} at offset 8")
    return n, _DTYPES[code]


def _read_exact(fh, count, what):
    raw = fh.read(count)
    if len(raw) < count:
        raise ValueError(f"truncated {what}: wanted {count} bytes at offset "
                         f"{fh.tell() - len(raw)}, got {len(raw)}")
    return raw


def save_coeffs(coeffs, fh, dtype=np.complex128):
    _write_header(fh, _MAGIC_COEFFS, coeffs.n, dtype)
    fh.write(coeffs.pack().astype(np.dtype(dtype).newbyteorder("<")).tobytes())


def load_coeffs(fh):
    n, dt = _read_header(fh, _MAGIC_COEFFS)
    total = 4 * n * n
    raw = _read_exact(fh, total * dt.itemsize, "coefficient payload")
    flat = np.frombuffer(raw, dtype=dt).astype(np.complex128)
    tail = fh.read(1)
    if tail:
        raise ValueError(f"trailing garbage at offset {fh.tell() - 1}")
    return ShtCoeffs.unpack(n, flat)


def save_grid(grid_values, fh, dtype=np.complex128):
    if isinstance(grid_values, ShtGridValues):
        n, values = grid_values.n, grid_values.values
    else:
        values = np.asarray(grid_values)
        n = values.shape[0] // 2 if values.ndim == 2 else 0
    if values.shape != (2 * n, 4 * n - 1) or n < 1:
        raise ValueError(f"grid shape {values.shape} is not 2N x (4N-1)")
    _write_header(fh, _MAGIC_GRID, n, dtype)
    fh.write(np.ascontiguousarray(values)
             .astype(np.dtype(dtype).newbyteorder("<")).tobytes())


def load_grid(fh):
    n, dt = _read_header(fh, _MAGIC_GRID)
    shape = (2 * n, 4 * n - 1)
    raw = _read_exact(fh, shape[0] * shape[1] * dt.itemsize, "grid payload")
    values = np.frombuffer(raw, dtype=dt).astype(np.complex128).reshape(shape)
    tail = fh.read(1)
    if tail:
        raise ValueError(f"trailing garbage at offset {fh.tell() - 1}")
    return ShtGridValues(n=n, values=values)
