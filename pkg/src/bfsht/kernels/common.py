"""Shared setup for the normalized associated Legendre recurrence kernels.

Both the compiled and the numpy kernel consume the same precomputed
coefficient arrays and scaled start values, and both restrict themselves to
multiply/subtract/ldexp on those inputs, so their outputs agree bitwise.

The functions here use the L2-normalized convention

    integral_{-1}^{1} Pbar_k^m(x)^2 dx = 1,   Pbar_m^m(x) >= 0,

i.e. no Condon-Shortley phase.  The degree recurrence (k -> k+1, m fixed) is

    Pbar_{k+1} = alpha_s * x * Pbar_k - beta_s * Pbar_{k-1},  s = k - m,

with alpha, beta from `recurrence_coefficients`.  Seed values Pbar_m^m(x)
span thousands of orders of magnitude, so they are handed to the kernels as
(mantissa, base-2 exponent) pairs and the kernels track the exponent through
the recurrence, rescaling by exact powers of two.
"""
from functools import lru_cache

import numpy as np

# Rescaling thresholds for the tracked-exponent recurrence.  One recurrence
# step grows a value by at most ~sqrt(2m+3) < 2**7 for any feasible m, so a
# per-step check against 2**+-500 can never overshoot the double range.
BIG = 2.0**500
SMALL = 2.0**-500
RESCALE = 1000

# Values with natural-log magnitude below -700 are emitted as exact zero.
MAG_MIN = float(np.exp(-700.0))

_LN2 = float(np.log(2.0))


def recurrence_coefficients(m: int, k_max: int):
    """alpha, beta arrays for the steps k -> k+1, k = m .. k_max-1."""
    if k_max <= m:
        z = np.zeros(0)
        return z, z
    k = np.arange(m, k_max, dtype=np.float64)
    num_a = (2.0 * k + 1.0) * (2.0 * k + 3.0)
    den = (k + 1.0 - m) * (k + 1.0 + m)
    alpha = np.sqrt(num_a / den)
    num_b = (2.0 * k + 3.0) * (k - m) * (k + m)
    den_b = (2.0 * k - 1.0) * den
    # k = m gives beta = 0 (the k-1 term is absent on the first step);
    # den_b is never 0 for k >= m >= 0 except the harmless m = k = 0 case.
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.sqrt(num_b / den_b)
    beta[k == m] = 0.0
    return alpha, beta


@lru_cache(maxsize=512)
def _log_prefactor(m: int) -> float:
    # log of sqrt((2m+1)/2 * (2m-1)!!/(2m)!!), the x-independent part of
    # Pbar_m^m, summed term by term to avoid factorial overflow.
    j = np.arange(1, m + 1, dtype=np.float64)
    s = float(np.sum(np.log((2.0 * j - 1.0) / (2.0 * j))))
    return 0.5 * (float(np.log(m + 0.5)) + s)


def start_values(m: int, x: np.ndarray):
    """Seed Pbar_m^m(x) as (mantissa, exponent) with value = mant * 2**exp.

    x must lie strictly inside (-1, 1).  Mantissas fall in [1, 2) except for
    the exact-zero case, which cannot occur on the open interval.
    """
    x = np.asarray(x, dtype=np.float64)
    # log(1 - x^2) split as log1p(-x) + log1p(x); the direct 1 - x*x form
    # loses ~7 digits for nodes near the poles.
    lp = _log_prefactor(m) + 0.5 * m * (np.log1p(-x) + np.log1p(x))
    e2 = np.floor(lp / _LN2)
    mant = np.exp(lp - e2 * _LN2)
    return mant, e2.astype(np.int32)
