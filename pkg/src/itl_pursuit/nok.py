"""Non-second-order kernel (NOK) loss and its IRLS minimiser.

For residuals ``e`` and kernel width ``sigma`` the loss is

    J(e) = mean((1 - exp(-e**2 / (2 sigma**2))) ** (p / 2))

which is an M-estimation cost ``rho(e) = (1 - k_sigma(e))**(p/2)``. It is
minimised by alternating three steps until the weights settle:

1. ``sigma = sqrt(||b - A x||^2 / 2m)``
2. ``gamma_j = rho'(e_j) / e_j``
3. ``x = argmin ||sqrt(gamma) * (b - A x)||``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import SIGMA_FLOOR, ls_solve
from .correlation import EPS_EXACT
from .errors import InvalidParameterError, ShapeError


@dataclass(frozen=True)
class NokConfig:
    """Parameters of the NOK loss and its IRLS loop.

    Attributes
    ----------
    p : float
        Power of the loss; ``p = 2`` is the correntropy (c-loss) case.
    irls_tol : float
        Stop once ``||gamma_t - gamma_{t-1}||_2`` drops below this value.
    irls_max_iter : int
        Hard cap on IRLS iterations.
    weight_cap : float
        Upper bound applied to raw weights, which diverge as ``e -> 0`` for ``p < 2``.
    sigma_floor : float
        Lower bound on the kernel width.
    """

    p: float = 1.7
    irls_tol: float = 1e-6
    irls_max_iter: int = 100
    weight_cap: float = 1e8
    sigma_floor: float = SIGMA_FLOOR

    def __post_init__(self):
        if not self.p > 0:
            raise InvalidParameterError(f"p must be positive, got {self.p}")
        if not self.irls_tol > 0:
            raise InvalidParameterError(f"irls_tol must be positive, got {self.irls_tol}")
        if self.irls_max_iter < 1:
            raise InvalidParameterError("irls_max_iter must be at least 1")
        if not self.weight_cap > 0:
            raise InvalidParameterError(f"weight_cap must be positive, got {self.weight_cap}")
        if not self.sigma_floor > 0:
            raise InvalidParameterError("sigma_floor must be positive")


@dataclass
class IrlsState:
    """Result of :func:`irls_fit`.

    ``weights`` are rescaled so that their maximum is 1 (all ones on an exact
    fit). ``residual`` is the weighted residual ``sqrt(weights) * (b - A x)``.
    ``loss_history[0]`` is the loss of the starting point; entry ``t`` is the
    loss after the ``t``-th weighted solve, each at that iteration's width.
    """

    weights: np.ndarray
    sigma: float
    coefficients: np.ndarray
    loss: float
    iterations: int
    converged: bool
    residual: np.ndarray
    loss_history: List[float] = field(default_factory=list)


def _check(sigma, p):
    if not sigma > 0:
        raise InvalidParameterError(f"kernel width must be positive, got {sigma}")
    if not p > 0:
        raise InvalidParameterError(f"p must be positive, got {p}")


def _one_minus_kernel(e, sigma):
    e = np.asarray(e, dtype=np.float64)
    u = (e * e) / (2.0 * sigma * sigma)
    return -np.expm1(-u), u


def nok_loss(errors, sigma: float, p: float) -> float:
    """Mean NOK loss of the residual vector ``errors``; lies in ``[0, 1]``."""
    _check(sigma, p)
    base, _ = _one_minus_kernel(errors, sigma)
    return float(np.mean(base ** (p / 2.0)))


def nok_weights(errors, sigma: float, p: float, weight_cap: float = 1e8) -> np.ndarray:
    """IRLS weights ``rho'(e)/e``, capped at ``weight_cap``.

    ``gamma = p/(2 sigma^2) * (1 - k)^(p/2 - 1) * k`` with
    ``k = exp(-e^2 / 2 sigma^2)``. For ``p < 2`` the weight of an exactly
    fitted entry is infinite and is returned as ``weight_cap``.
    """
    _check(sigma, p)
    base, u = _one_minus_kernel(errors, sigma)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        gamma = (p / (2.0 * sigma * sigma)) * base ** (p / 2.0 - 1.0) * np.exp(-u)
    gamma = np.where(np.isnan(gamma), weight_cap, gamma)
    return np.minimum(gamma, weight_cap)


def sigma_update(b, selected, x, sigma_floor: float = SIGMA_FLOOR) -> float:
    """Kernel width ``max(sqrt(||b - selected @ x||^2 / 2m), sigma_floor)``."""
    b = np.asarray(b, dtype=np.float64)
    A = np.asarray(selected, dtype=np.float64).reshape(b.size, -1)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if A.shape[1] != x.size:
        raise ShapeError(f"{A.shape[1]} columns but {x.size} coefficients")
    r = b - A @ x
    return max(math.sqrt(float(r @ r) / (2.0 * b.size)), sigma_floor)


def weighted_ls_step(b, selected, weights) -> np.ndarray:
    """Minimiser of ``||sqrt(diag(weights)) (b - selected @ x)||_2``.

    Equivalent to solving the weighted normal system
    ``(A^T W A) x = A^T W b``; computed by QR of the row-scaled matrix.
    """
    b = np.asarray(b, dtype=np.float64)
    A = np.asarray(selected, dtype=np.float64).reshape(b.size, -1)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != b.shape:
        raise ShapeError(f"{w.size} weights for a length-{b.size} signal")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidParameterError("weights must be finite and nonnegative")
    sw = np.sqrt(w)
    return ls_solve(sw[:, None] * A, sw * b)


def irls_fit(b, selected, cfg: NokConfig = NokConfig(), init_x: Optional[np.ndarray] = None) -> IrlsState:
    """Minimise the NOK loss over coefficients of the ``selected`` columns.

    Parameters
    ----------
    b : array_like, shape (m,)
        Observation.
    selected : array_like, shape (m, k)
        Columns of the current support.
    cfg : NokConfig
    init_x : array_like, shape (k,), optional
        Starting coefficients; defaults to the unweighted least-squares fit.

    Returns
    -------
    IrlsState
        ``converged`` is False when ``cfg.irls_max_iter`` was reached first.

    Raises
    ------
    SingularSystemError
        If a weighted system loses rank (e.g. too many zero weights).
    """
    b = np.asarray(b, dtype=np.float64)
    A = np.asarray(selected, dtype=np.float64).reshape(b.size, -1)
    x = ls_solve(A, b) if init_x is None else np.asarray(init_x, dtype=np.float64).reshape(-1)
    if x.size != A.shape[1]:
        raise ShapeError(f"{A.shape[1]} columns but {x.size} initial coefficients")
    m = b.size
    bb = float(b @ b)

    e = b - A @ x
    sigma = sigma_update(b, A, x, cfg.sigma_floor)
    history = [nok_loss(e, sigma, cfg.p)]
    prev = None
    converged = False
    it = 0
    while it < cfg.irls_max_iter:
        if float(e @ e) <= EPS_EXACT * bb:
            # zero-residual fixed point: every weighting yields the same x
            gamma = np.ones(m)
            e = np.zeros(m)
            history.append(0.0)
            converged = True
            it = max(it, 1)
            break
        it += 1
        gamma = nok_weights(e, sigma, cfg.p, cfg.weight_cap)
        top = gamma.max()
        gamma = gamma / top if top > 0 else np.ones(m)
        x = weighted_ls_step(b, A, gamma)
        e = b - A @ x
        history.append(nok_loss(e, sigma, cfg.p))
        if prev is not None and np.linalg.norm(gamma - prev) < cfg.irls_tol:
            converged = True
            break
        prev = gamma
        sigma = sigma_update(b, A, x, cfg.sigma_floor)

    return IrlsState(
        weights=gamma,
        sigma=sigma,
        coefficients=x,
        loss=history[-1],
        iterations=it,
        converged=converged,
        residual=np.sqrt(gamma) * e,
        loss_history=history,
    )
