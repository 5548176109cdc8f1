"""Class-wise residual scoring on top of a sparse code.

After a sparse code ``x`` of ``b`` is found over a labelled dictionary, the
class-``c`` reconstruction keeps only the coefficients of class-``c`` atoms.
The NOK classifier scores each class by

    r_c = (1 - exp(-||b - A delta_c(x)||^2 / (2 sigma^2))) ** (p / 2)

with ``sigma^2 = ||b - A x||^2 / 2m`` shared by all classes, and picks the
class with the smallest score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, List, Optional

import numpy as np

from .core import SIGMA_FLOOR, Dictionary, as_dictionary, as_signal
from .errors import ConfigurationError, InvalidParameterError, ShapeError
from .pursuit import PursuitConfig, pursuit_solve

SCORERS = ("nok", "euclidean")


@dataclass(frozen=True)
class ClassScore:
    """Score of one class.

    ``residual_score`` is the NOK class residual in ``[0, 1]``;
    ``exponent`` is ``||b - b_c||^2 / (2 sigma^2)``, of which the score is a
    strictly increasing function. The score saturates at 1.0 in floating
    point once the exponent passes ~37, so ranking uses
    ``(residual_score, exponent)``.
    """

    class_id: Hashable
    residual_score: float
    exponent: float
    residual_norm: float

    @property
    def rank_key(self):
        return (self.residual_score, self.exponent)


def _labelled(dictionary) -> Dictionary:
    D = as_dictionary(dictionary)
    if D.class_labels is None:
        raise ConfigurationError("classification needs a dictionary with class labels")
    return D


def class_residuals(b, dictionary, x, p: float, sigma_floor: float = SIGMA_FLOOR) -> List[ClassScore]:
    """NOK residual score of every class, in ascending label order."""
    if not p > 0:
        raise InvalidParameterError(f"p must be positive, got {p}")
    D = _labelled(dictionary)
    b = as_signal(b, "b")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != D.n_atoms or b.size != D.m:
        raise ShapeError("signal, dictionary and coefficient shapes disagree")
    full = b - D.atoms @ x
    sigma = max(math.sqrt(float(full @ full) / (2.0 * D.m)), sigma_floor)
    scores = []
    for label in D.classes():
        mask = D.class_mask(label)
        r = b - D.atoms[:, mask] @ x[mask]
        d2 = float(r @ r)
        u = d2 / (2.0 * sigma * sigma)
        score = float(-math.expm1(-u)) ** (p / 2.0)
        scores.append(ClassScore(label, score, u, math.sqrt(d2)))
    return scores


def euclidean_class_residuals(b, dictionary, x) -> List[ClassScore]:
    """Baseline scores ``||b - A delta_c(x)||_2`` (stored in ``residual_score``)."""
    D = _labelled(dictionary)
    b = as_signal(b, "b")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    out = []
    for label in D.classes():
        mask = D.class_mask(label)
        d = float(np.linalg.norm(b - D.atoms[:, mask] @ x[mask]))
        out.append(ClassScore(label, d, d, d))
    return out


def pick_class(scores: List[ClassScore]):
    """Label with the lowest score; ties go to the lowest label."""
    best = min(range(len(scores)), key=lambda i: (scores[i].rank_key, i))
    return scores[best].class_id


def classify(b, dictionary, cfg: PursuitConfig, p: Optional[float] = None, scorer: str = "nok"):
    """Sparse-code ``b`` with ``cfg`` and return the predicted class label.

    ``p`` defaults to the solver's NOK power (2 for least-squares solvers).
    ``scorer="euclidean"`` swaps in the plain class-residual norm.
    """
    D = _labelled(dictionary)
    sol = pursuit_solve(b, D, cfg)
    if scorer == "euclidean":
        return pick_class(euclidean_class_residuals(b, D, sol.x))
    if scorer != "nok":
        raise ConfigurationError(f"scorer must be one of {SCORERS}, got {scorer!r}")
    if p is None:
        p = cfg.nok.p if cfg.nok is not None else 2.0
    return pick_class(class_residuals(b, D, sol.x, p))
