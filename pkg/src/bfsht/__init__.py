"""Fast associated Legendre and spherical harmonic transforms.

Transform matrices are partitioned along the turning-point curve; the
oscillatory side is compressed with an interpolative-decomposition butterfly
factorization and the decaying side with randomized low-rank approximation,
giving near-linear apply cost per order.
"""
from .kernels import BACKEND
from .lowrank import SamplingConfig
from .special import (
    gauss_legendre,
    legendre_normalized,
    legendre_normalized_column,
    turning_point,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "SamplingConfig",
    "gauss_legendre",
    "legendre_normalized",
    "legendre_normalized_column",
    "turning_point",
    "__version__",
]
