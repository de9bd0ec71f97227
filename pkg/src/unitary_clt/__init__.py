"""Fluctuations of linear statistics of unitary Brownian motion.

Modules: ``matrix_core`` (Lie-algebra kernels), ``unitary_bm`` (path
simulation), ``free_limit`` (moments and covariance kernel of the free
limit), ``covariance`` (limiting covariances of trace functionals),
``symcomb`` (walk counts, hook LR coefficients, exact SU(N) covariance),
``mc_harness`` (Monte Carlo checks) and ``cli``.
"""

from .errors import (
    CapacityError,
    DomainError,
    InvalidInput,
    InvalidParameter,
    NumericalFailure,
    ShapeError,
    StatisticsError,
    TruncationError,
    UnitaryCLTError,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "DomainError",
    "InvalidInput",
    "InvalidParameter",
    "NumericalFailure",
    "ShapeError",
    "StatisticsError",
    "TruncationError",
    "UnitaryCLTError",
]
