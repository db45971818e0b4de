"""Dense brute-force references for the fast paths.

Everything here is intentionally naive: materialize the matrix, multiply it,
or evaluate the transform as a direct sum over all orders without any FFT.
Guards keep accidental large-N invocations from eating the machine; pass the
override flag for deliberate benchmarking.
"""
from dataclasses import dataclass

import numpy as np

from .kernels import legendre_table
from .partition import entry_oracle
from .sht import ShtCoeffs, ShtGridValues, make_grid
from .special import gauss_legendre

__all__ = [
    "DenseAltMatrix",
    "dense_alt_build",
    "dense_matvec",
    "dense_matvec_transpose",
    "dense_sht_forward",
    "dense_sht_inverse",
    "DENSE_ALT_GUARD",
    "DENSE_SHT_GUARD",
]

DENSE_ALT_GUARD = 8192
DENSE_SHT_GUARD = 128


@dataclass
class DenseAltMatrix:
    spec: object
    data: np.ndarray


def dense_alt_build(spec, allow_large=False):
    """Materialize one parity half-matrix row by row from the entry oracle."""
    if spec.n > DENSE_ALT_GUARD and not allow_large:
        raise ValueError(f"half-size {spec.n} exceeds the dense guard "
                         f"{DENSE_ALT_GUARD}; pass allow_large=True to force")
    oracle = entry_oracle(spec)
    data = oracle.block(np.arange(spec.n, dtype=np.intp),
                        np.arange(spec.num_cols, dtype=np.intp))
    return DenseAltMatrix(spec=spec, data=data)


def _data(matrix):
    return matrix.data if isinstance(matrix, DenseAltMatrix) else np.asarray(matrix)


def dense_matvec(matrix, v):
    return _data(matrix) @ np.asarray(v)


def dense_matvec_transpose(matrix, v):
    return _data(matrix).T @ np.asarray(v)


def dense_sht_forward(n, coeffs, allow_large=False):
    """Direct synthesis: sum every order's profile times its phi phase."""
    if n > DENSE_SHT_GUARD and not allow_large:
        raise ValueError(f"N={n} exceeds the dense transform guard "
                         f"{DENSE_SHT_GUARD}; pass allow_large=True to force")
    quad = gauss_legendre(2 * n)
    grid = make_grid(n, quad)
    out = np.zeros((2 * n, 4 * n - 1), dtype=np.complex128)
    for m in range(-(2 * n - 1), 2 * n):
        table = legendre_table(abs(m), quad.nodes, np.arange(abs(m), 2 * n))
        g = table @ coeffs[m]
        out += g[:, None] * np.exp(1j * m * grid.phis)[None, :]
    return ShtGridValues(n=n, values=out)


def dense_sht_inverse(n, grid_values, allow_large=False):
    """Direct analysis: phi projection by explicit sums, then weighted sums."""
    if n > DENSE_SHT_GUARD and not allow_large:
        raise ValueError(f"N={n} exceeds the dense transform guard "
                         f"{DENSE_SHT_GUARD}; pass allow_large=True to force")
    values = grid_values.values if isinstance(grid_values, ShtGridValues) \
        else np.asarray(grid_values)
    quad = gauss_legendre(2 * n)
    grid = make_grid(n, quad)
    num_phi = 4 * n - 1
    out = ShtCoeffs.zeros(n)
    for m in range(-(2 * n - 1), 2 * n):
        phase = np.exp(-1j * m * grid.phis)
        g = values @ phase / num_phi
        table = legendre_table(abs(m), quad.nodes, np.arange(abs(m), 2 * n))
        out[m] = table.T @ (quad.weights * g)
    return out
