"""ITL-Correlation between a signal and an atom, and the greedy atom sweep.

The correlation of ``b`` with an atom ``a`` is

    V(b, a) = 1 / (sqrt(2 pi) sigma) * exp(-||b - beta* a||^2 / (2 sigma^2))

with ``beta* = a.b / a.a`` the least-squares contribution coefficient. In
*adaptive* mode (the pursuit sweep) ``sigma`` is refit per pair as
``sqrt(||b - beta* a||^2 / (2 m))``; in *fixed* mode a caller-supplied
``sigma`` is shared by every evaluation, which is the setting the scale
identities of the measure hold in.

Everything is evaluated as ``log V``: with an adaptive width the exponent is
exactly ``-m`` and ``exp(-m)`` underflows long before ``m`` gets large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import SIGMA_FLOOR, Dictionary, as_dictionary
from .errors import (
    EmptyCandidateError,
    InvalidAtomError,
    InvalidParameterError,
    InvalidSignalError,
    ShapeError,
)

# Relative squared residual below which a fit counts as exact.
EPS_EXACT = 1e-20

SWEEP_RULES = ("inner-product", "itl")

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class CorrelationResult:
    """Outcome of one ITL-Correlation evaluation.

    ``log_value`` is ``log V``. On an exact fit it holds the sentinel
    maximum: ``-log(sqrt(2 pi) sigma)`` in fixed mode (the attainable
    maximum) and ``+inf`` in adaptive mode. A zero signal has ``V = 0``,
    i.e. ``log_value = -inf``.
    """

    beta: float
    sigma: float
    log_value: float
    exact_fit: bool

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < math.inf else math.inf


def _pair(b, a):
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if b.shape != a.shape:
        raise ShapeError(f"signal length {b.size} != atom length {a.size}")
    if b.size == 0:
        raise InvalidSignalError("vectors must have at least one entry")
    return b, a


def beta_star(b, a) -> float:
    """Contribution coefficient ``a.b / a.a`` minimising ``||b - beta a||``."""
    b, a = _pair(b, a)
    aa = float(a @ a)
    if aa == 0.0:
        raise InvalidAtomError("atom is the zero vector")
    return float(a @ b) / aa


def kernel_width(b, a, beta: float, sigma_floor: float = SIGMA_FLOOR) -> float:
    """Adaptive width ``max(sqrt(||b - beta a||^2 / 2m), sigma_floor)``."""
    b, a = _pair(b, a)
    r = b - beta * a
    return max(math.sqrt(float(r @ r) / (2.0 * b.size)), sigma_floor)


def _correlate(b, a, sigma, normalize):
    b, a = _pair(b, a)
    if sigma is not None and not sigma > 0:
        raise InvalidParameterError(f"fixed kernel width must be positive, got {sigma}")
    beta = beta_star(b, a)
    bb = float(b @ b)
    if normalize and bb == 0.0:
        raise InvalidSignalError("normalized ITL-Correlation needs a nonzero signal")
    r = b - beta * a
    rr = float(r @ r)
    width = kernel_width(b, a, beta) if sigma is None else float(sigma)
    if bb == 0.0:
        return CorrelationResult(beta, width, -math.inf, False)
    if rr < EPS_EXACT * bb:
        top = math.inf if sigma is None else -(_LOG_SQRT_2PI + math.log(width))
        return CorrelationResult(beta, width, top, True)
    exponent = rr / (2.0 * width * width)
    if normalize:
        exponent /= bb
    return CorrelationResult(beta, width, -(_LOG_SQRT_2PI + math.log(width)) - exponent, False)


def itl_correlation(b, a, sigma: Optional[float] = None) -> CorrelationResult:
    """ITL-Correlation of signal ``b`` with atom ``a``.

    Parameters
    ----------
    b, a : array_like, shape (m,)
        Signal and atom; ``a`` must be nonzero. A zero ``b`` is allowed and
        has zero correlation with every atom.
    sigma : float, optional
        Fixed kernel width. ``None`` (default) refits the width per pair.
    """
    return _correlate(b, a, sigma, normalize=False)


def itl_correlation_normalized(b, a, sigma: Optional[float] = None) -> CorrelationResult:
    """ITL-Correlation with the exponent divided by ``||b||^2``.

    Invariant to rescaling either argument. ``b`` must be nonzero.
    """
    return _correlate(b, a, sigma, normalize=True)


def is_itl_orthogonal(b, a, tol: float = 1e-12) -> bool:
    """True when the contribution coefficient of ``a`` in ``b`` is within ``tol`` of 0."""
    return abs(beta_star(b, a)) <= tol


def itl_log_values(residual, atoms: np.ndarray) -> np.ndarray:
    """Adaptive-width ``log V(residual, a_i)`` for every column of ``atoms``."""
    r = np.asarray(residual, dtype=np.float64)
    m = r.size
    rr = float(r @ r)
    if rr == 0.0:
        return np.full(atoms.shape[1], -np.inf)
    aa = np.einsum("ij,ij->j", atoms, atoms)
    beta = (r @ atoms) / aa
    resid = r[:, None] - atoms * beta
    res2 = np.einsum("ij,ij->j", resid, resid)
    sigma = np.maximum(np.sqrt(res2 / (2.0 * m)), SIGMA_FLOOR)
    logv = -(_LOG_SQRT_2PI + np.log(sigma)) - res2 / (2.0 * sigma * sigma)
    logv[res2 < EPS_EXACT * rr] = np.inf
    return logv


def sweep_select(residual, dictionary, excluded: Iterable[int] = (), rule: str = "itl") -> int:
    """Index of the atom best correlated with ``residual``.

    ``rule="itl"`` maximises the adaptive ITL-Correlation;
    ``rule="inner-product"`` maximises ``|<residual, a_i>|``. Atoms in
    ``excluded`` are skipped and ties go to the lowest index.
    """
    D: Dictionary = as_dictionary(dictionary)
    r = np.asarray(residual, dtype=np.float64).reshape(-1)
    if r.size != D.m:
        raise ShapeError(f"residual length {r.size} != dictionary rows {D.m}")
    candidates = np.ones(D.n_atoms, dtype=bool)
    for i in excluded:
        candidates[int(i)] = False
    if not candidates.any():
        raise EmptyCandidateError("every atom is excluded from the sweep")
    if rule == "itl":
        scores = itl_log_values(r, D.atoms)
    elif rule == "inner-product":
        scores = np.abs(r @ D.atoms)
    else:
        raise InvalidParameterError(f"unknown sweep rule {rule!r}; expected one of {SWEEP_RULES}")
    idx = np.flatnonzero(candidates)
    return int(idx[np.argmax(scores[idx])])
