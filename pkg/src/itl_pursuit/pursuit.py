"""Greedy pursuit loops: plain OMP and the robust ITL/NOK family.

One loop covers four solvers, differing only in the sweep rule and the
coefficient-estimation rule:

========  ===============  ======================
preset    sweep            estimation
========  ===============  ======================
``omp``   inner product    least squares
``cmp``   inner product    NOK loss, ``p = 2``
``kns``   inner product    NOK loss, general ``p``
``inok``  ITL-Correlation  NOK loss, general ``p``
========  ===============  ======================
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .core import Dictionary, as_dictionary, as_signal, ls_solve
from .correlation import SWEEP_RULES, sweep_select
from .errors import ConfigurationError, ShapeError
from .nok import NokConfig, irls_fit

LOSS_RULES = ("least-squares", "nok")
PRESETS = ("omp", "cmp", "kns", "inok")


@dataclass(frozen=True)
class PursuitConfig:
    """Solver configuration.

    Attributes
    ----------
    sweep_rule : {"inner-product", "itl"}
    loss_rule : {"least-squares", "nok"}
    sparsity : int
        Maximum support size ``L``.
    residual_eps : float
        Stop once the residual norm drops below this value (0 disables).
    nok : NokConfig, optional
        Required when ``loss_rule == "nok"``.
    max_outer_iter : int, optional
        Safety bound on greedy iterations; defaults to ``min(m, N)``.
    name : str, optional
        Label used in reports; defaults to the matching preset name.
    """

    sweep_rule: str = "inner-product"
    loss_rule: str = "least-squares"
    sparsity: int = 10
    residual_eps: float = 0.0
    nok: Optional[NokConfig] = None
    max_outer_iter: Optional[int] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.sweep_rule not in SWEEP_RULES:
            raise ConfigurationError(f"sweep_rule must be one of {SWEEP_RULES}, got {self.sweep_rule!r}")
        if self.loss_rule not in LOSS_RULES:
            raise ConfigurationError(f"loss_rule must be one of {LOSS_RULES}, got {self.loss_rule!r}")
        if self.sparsity < 1:
            raise ConfigurationError(f"sparsity must be >= 1, got {self.sparsity}")
        if not self.residual_eps >= 0:
            raise ConfigurationError(f"residual_eps must be >= 0, got {self.residual_eps}")
        if self.loss_rule == "nok" and self.nok is None:
            object.__setattr__(self, "nok", NokConfig())
        if self.max_outer_iter is not None and self.max_outer_iter < 1:
            raise ConfigurationError("max_outer_iter must be >= 1")
        if self.name is None:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self):
        if self.loss_rule == "least-squares":
            return "omp" if self.sweep_rule == "inner-product" else "itl-omp"
        if self.sweep_rule == "itl":
            return "inok"
        return "cmp" if self.nok.p == 2.0 else "kns"

    @property
    def is_omp(self) -> bool:
        return self.sweep_rule == "inner-product" and self.loss_rule == "least-squares"

    @classmethod
    def preset(cls, name: str, sparsity: int = 10, p: float = 1.7, **kwargs) -> "PursuitConfig":
        """Build one of the named solver configurations.

        ``p`` is ignored by ``omp`` and forced to 2 for ``cmp``. Extra keyword
        arguments (``residual_eps``, ``max_outer_iter``, ``nok``) pass through;
        an explicit ``nok`` config has its ``p`` overridden as above.
        """
        nok = kwargs.pop("nok", None) or NokConfig()
        if name == "omp":
            return cls("inner-product", "least-squares", sparsity, name="omp", **kwargs)
        if name == "cmp":
            return cls("inner-product", "nok", sparsity, nok=replace(nok, p=2.0), name="cmp", **kwargs)
        if name == "kns":
            return cls("inner-product", "nok", sparsity, nok=replace(nok, p=p), name="kns", **kwargs)
        if name == "inok":
            return cls("itl", "nok", sparsity, nok=replace(nok, p=p), name="inok", **kwargs)
        raise ConfigurationError(f"unknown preset {name!r}; expected one of {PRESETS}")


@dataclass
class SparseSolution:
    """Output of a pursuit run.

    ``x`` is full length with zeros off ``support``; ``support`` keeps the
    selection order. ``weights`` are the final IRLS weights (all ones for the
    least-squares rule) and ``residual_norm`` is the norm of the residual the
    stopping test saw (weighted for the NOK rule). ``per_iteration_loss``
    holds, per greedy step, the mean squared residual (least squares) or the
    converged NOK loss.
    """

    support: Tuple[int, ...]
    x: np.ndarray
    weights: np.ndarray
    residual_norm: float
    outer_iterations: int
    per_iteration_loss: list = field(default_factory=list)
    converged: bool = True


def pursuit_solve(b, dictionary, cfg: PursuitConfig) -> SparseSolution:
    """Greedy sparse coding of ``b`` over ``dictionary`` according to ``cfg``.

    Each iteration selects the atom that best matches the current residual,
    refits the coefficients over the support and updates the residual. The
    NOK rule feeds the weighted residual ``sqrt(gamma) * (b - A_S x)`` back
    into the next sweep, against the unweighted atoms. Stops when the support
    reaches ``cfg.sparsity``, the residual norm falls below
    ``cfg.residual_eps``, or ``cfg.max_outer_iter`` iterations have run.
    """
    D: Dictionary = as_dictionary(dictionary)
    b = as_signal(b, "b")
    if b.size != D.m:
        raise ShapeError(f"signal length {b.size} != dictionary rows {D.m}")
    max_outer = cfg.max_outer_iter or min(D.m, D.n_atoms)
    limit = min(cfg.sparsity, max_outer, D.n_atoms)

    support: list = []
    r = b.copy()
    weights = np.ones(D.m)
    coef = np.zeros(0)
    losses = []
    converged = True
    while len(support) < limit:
        if np.linalg.norm(r) < cfg.residual_eps:
            break
        support.append(sweep_select(r, D, support, cfg.sweep_rule))
        As = D.columns(support)
        coef = ls_solve(As, b)
        if cfg.loss_rule == "nok":
            state = irls_fit(b, As, cfg.nok, init_x=coef)
            coef = state.coefficients
            weights = state.weights
            r = state.residual
            losses.append(state.loss)
            converged = converged and state.converged
        else:
            r = b - As @ coef
            losses.append(float(r @ r) / D.m)

    x = np.zeros(D.n_atoms)
    x[support] = coef
    return SparseSolution(
        support=tuple(support),
        x=x,
        weights=weights,
        residual_norm=float(np.linalg.norm(r)),
        outer_iterations=len(support),
        per_iteration_loss=losses,
        converged=converged,
    )


def omp_solve(b, dictionary, cfg: Optional[PursuitConfig] = None, sparsity: int = 10) -> SparseSolution:
    """Orthogonal matching pursuit; ``cfg`` must be an OMP configuration."""
    if cfg is None:
        cfg = PursuitConfig.preset("omp", sparsity)
    if not cfg.is_omp:
        raise ConfigurationError("omp_solve needs the inner-product sweep with least-squares estimation")
    return pursuit_solve(b, dictionary, cfg)
