"""Full spherical harmonic transform on the Gauss-Legendre x uniform-phi grid.

Synthesis runs one compressed Legendre transform per order to get each
order's profile over colatitude, then one inverse DFT of odd length 4N-1 per
colatitude ring.  Analysis is the reverse: a forward DFT per ring separates
orders exactly up to |m| = 2N-1, and the weighted transposed Legendre plans
recover degree coefficients.  Orders m and -m share one plan since the
colatitude factor depends on |m| only.

The phi nodes sit at half-sample offsets 2*pi*(j+1/2)/(4N-1), so a diagonal
twiddle exp(i*m*phi_0) bridges them to the unshifted DFT convention.
"""
from dataclasses import dataclass

import numpy as np

from .alt import alt_forward, alt_inverse, plan_alt
from .lowrank import SamplingConfig
from .partition import TAU_DEFAULT
from .special import gauss_legendre

__all__ = [
    "ShtGrid",
    "ShtCoeffs",
    "ShtGridValues",
    "ShtPlan",
    "make_grid",
    "plan_sht",
    "sht_forward",
    "sht_inverse",
]


@dataclass
class ShtGrid:
    n: int
    thetas: np.ndarray
    phis: np.ndarray


@dataclass
class ShtCoeffs:
    """beta_{k,m} for |m| <= k <= 2N-1, stored per m ascending from -(2N-1)."""

    n: int
    by_m: list

    @classmethod
    def zeros(cls, n):
        return cls(n=n, by_m=[np.zeros(2 * n - abs(m), dtype=np.complex128)
                              for m in range(-(2 * n - 1), 2 * n)])

    def _idx(self, m):
        if abs(m) > 2 * self.n - 1:
            raise IndexError(f"order {m} outside band limit {2 * self.n - 1}")
        return m + 2 * self.n - 1

    def __getitem__(self, m):
        return self.by_m[self._idx(m)]

    def __setitem__(self, m, values):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (2 * self.n - abs(m),):
            raise ValueError(f"order {m} expects {2 * self.n - abs(m)} "
                             f"coefficients, got {values.shape}")
        self.by_m[self._idx(m)] = values

    def pack(self):
        return np.concatenate(self.by_m)

    @classmethod
    def unpack(cls, n, flat):
        out = []
        pos = 0
        for m in range(-(2 * n - 1), 2 * n):
            ln = 2 * n - abs(m)
            out.append(np.asarray(flat[pos:pos + ln], dtype=np.complex128))
            pos += ln
        if pos != len(flat):
            raise ValueError(f"expected {pos} coefficients, got {len(flat)}")
        return cls(n=n, by_m=out)


@dataclass
class ShtGridValues:
    n: int
    values: np.ndarray


@dataclass
class ShtPlan:
    n: int
    alt_plans: list
    params: SamplingConfig

    @property
    def quadrature(self):
        return self.alt_plans[0].quadrature


def make_grid(n, quadrature=None):
    if quadrature is None:
        quadrature = gauss_legendre(2 * n)
    num_phi = 4 * n - 1
    phis = 2.0 * np.pi * (np.arange(num_phi) + 0.5) / num_phi
    return ShtGrid(n=n, thetas=np.arccos(quadrature.nodes), phis=phis)


def plan_sht(n, params=None, n0=None, tau=TAU_DEFAULT):
    """Compressed Legendre plans for every order m = 0 .. 2N-1.

    One quadrature rule is shared across all plans; negative orders reuse
    the plan for |m|.  Failures carry the offending order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if params is None:
        params = SamplingConfig()
    kwargs = {} if n0 is None else {"n0": n0}
    quadrature = gauss_legendre(2 * n)
    plans = []
    for m in range(2 * n):
        try:
            plans.append(plan_alt(n, m, params, tau=tau,
                                  quadrature=quadrature, **kwargs))
        except Exception as exc:
            raise RuntimeError(f"planning failed at order m={m}: {exc}") from exc
    return ShtPlan(n=n, alt_plans=plans, params=params)


def _bins(n):
    num_phi = 4 * n - 1
    ms = np.arange(-(2 * n - 1), 2 * n)
    return num_phi, ms, np.where(ms >= 0, ms, ms + num_phi)


def sht_forward(plan, coeffs):
    """Coefficients to grid values f(theta_l, phi_j), shape 2N x (4N-1)."""
    n = plan.n
    if coeffs.n != n:
        raise ValueError(f"coefficient set is for N={coeffs.n}, plan N={n}")
    num_phi, ms, bins = _bins(n)
    phi0 = np.pi / num_phi
    buf = np.zeros((2 * n, num_phi), dtype=np.complex128)
    for m, b in zip(ms, bins):
        g = alt_forward(plan.alt_plans[abs(m)], coeffs[m]).values
        buf[:, b] = g * np.exp(1j * m * phi0)
    return ShtGridValues(n=n, values=num_phi * np.fft.ifft(buf, axis=1))


def sht_inverse(plan, grid_values):
    """Grid values to coefficients; exact order separation up to |m| = 2N-1."""
    n = plan.n
    values = grid_values.values if isinstance(grid_values, ShtGridValues) \
        else np.asarray(grid_values)
    if values.shape != (2 * n, 4 * n - 1):
        raise ValueError(f"expected grid shape {(2 * n, 4 * n - 1)}, "
                         f"got {values.shape}")
    num_phi, ms, bins = _bins(n)
    phi0 = np.pi / num_phi
    spectrum = np.fft.fft(values, axis=1) / num_phi
    out = ShtCoeffs.zeros(n)
    for m, b in zip(ms, bins):
        g = spectrum[:, b] * np.exp(-1j * m * phi0)
        out[m] = alt_inverse(plan.alt_plans[abs(m)], g).values
    return out
