"""Robust orthogonal matching pursuit driven by ITL-Correlation.

The public API covers the Gaussian kernel and least-squares primitive, the
ITL-Correlation measure and atom sweep, the NOK loss with its IRLS solver,
the greedy pursuit loop with its OMP/CMP/KNS/INOK presets, and the
class-residual classifier.
"""

from .classifier import ClassScore, class_residuals, classify, euclidean_class_residuals
from .core import Dictionary, as_signal, gaussian_kernel, ls_solve
from .correlation import (
    CorrelationResult,
    beta_star,
    is_itl_orthogonal,
    itl_correlation,
    itl_correlation_normalized,
    kernel_width,
    sweep_select,
)
from .errors import (
    ConfigurationError,
    EmptyCandidateError,
    InvalidAtomError,
    InvalidParameterError,
    InvalidSignalError,
    PursuitError,
    ShapeError,
    SingularSystemError,
)
from .nok import IrlsState, NokConfig, irls_fit, nok_loss, nok_weights, sigma_update, weighted_ls_step
from .pursuit import PursuitConfig, SparseSolution, omp_solve, pursuit_solve

__version__ = "0.1.0"
