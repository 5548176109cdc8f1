"""Signals, dictionaries, the Gaussian kernel and a guarded least-squares solve."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import numpy as np

from .errors import (
    InvalidAtomError,
    InvalidParameterError,
    InvalidSignalError,
    ShapeError,
    SingularSystemError,
)

SIGMA_FLOOR = 1e-12
# Largest accepted 2-norm condition number of a least-squares system.
COND_LIMIT = 1e12

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def as_signal(values, name="signal") -> np.ndarray:
    """Validate ``values`` as a real signal and return a float64 1-D copy.

    Raises
    ------
    InvalidSignalError
        If the input is not 1-D, is empty, or has NaN/Inf entries.
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        raise InvalidSignalError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidSignalError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise InvalidSignalError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Column-atom dictionary ``A`` of shape ``(m, N)``.

    Parameters
    ----------
    atoms : array_like, shape (m, N)
        Each column is one atom. Atoms are used as given; call
        :meth:`normalized` for unit-norm columns.
    class_labels : sequence, optional
        One class identifier per atom.
    """

    atoms: np.ndarray
    class_labels: Optional[tuple] = None

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64)
        if atoms.ndim != 2 or atoms.shape[0] == 0 or atoms.shape[1] == 0:
            raise ShapeError(f"atoms must be a non-empty 2-D matrix, got shape {atoms.shape}")
        if not np.all(np.isfinite(atoms)):
            raise InvalidParameterError("atoms have non-finite entries")
        zero = np.flatnonzero(~np.any(atoms != 0.0, axis=0))
        if zero.size:
            raise InvalidAtomError(f"atoms {zero.tolist()} are zero vectors")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        if self.class_labels is not None:
            labels = tuple(self.class_labels)
            if len(labels) != atoms.shape[1]:
                raise ShapeError(
                    f"{len(labels)} class labels given for {atoms.shape[1]} atoms"
                )
            object.__setattr__(self, "class_labels", labels)

    @property
    def m(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    @property
    def shape(self):
        return self.atoms.shape

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        return self.atoms[:, list(indices)]

    def normalized(self) -> "Dictionary":
        """Return a copy whose atoms have unit Euclidean norm."""
        return Dictionary(self.atoms / np.linalg.norm(self.atoms, axis=0), self.class_labels)

    def classes(self) -> list:
        """Distinct class labels in ascending order."""
        if self.class_labels is None:
            return []
        return sorted(set(self.class_labels))

    def class_mask(self, label: Hashable) -> np.ndarray:
        if self.class_labels is None:
            raise ShapeError("dictionary carries no class labels")
        return np.array([lab == label for lab in self.class_labels])


def as_dictionary(dictionary) -> Dictionary:
    if isinstance(dictionary, Dictionary):
        return dictionary
    return Dictionary(np.asarray(dictionary, dtype=np.float64))


def gaussian_kernel(e, sigma: float, normalized: bool = False):
    """Gaussian kernel ``exp(-e**2 / (2 sigma**2))``.

    With ``normalized=True`` the density normalizer ``1/(sqrt(2 pi) sigma)``
    is included. ITL-Correlation uses the normalized form; the NOK loss and
    its IRLS weights use the unnormalized one. Works elementwise on arrays.
    """
    if not sigma > 0:
        raise InvalidParameterError(f"kernel width must be positive, got {sigma}")
    e = np.asarray(e, dtype=np.float64)
    k = np.exp(-(e * e) / (2.0 * sigma * sigma))
    if normalized:
        k = k / (_SQRT_2PI * sigma)
    return k if k.ndim else float(k)


def ls_solve(columns, target, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Least-squares coefficients ``argmin_x ||columns @ x - target||_2``.

    Solved through a reduced QR factorization of ``columns``.

    Raises
    ------
    SingularSystemError
        When the triangular factor has condition number above ``cond_limit``.
    """
    C = np.asarray(columns, dtype=np.float64)
    if C.ndim == 1:
        C = C[:, None]
    b = np.asarray(target, dtype=np.float64)
    if C.ndim != 2 or C.shape[1] < 1:
        raise ShapeError(f"columns must be an (m, k) matrix with k >= 1, got {C.shape}")
    if b.shape != (C.shape[0],):
        raise ShapeError(f"target of shape {b.shape} does not match {C.shape[0]} rows")
    if C.shape[1] > C.shape[0]:
        raise SingularSystemError(
            f"{C.shape[1]} columns exceed {C.shape[0]} rows", math.inf
        )
    Q, R = np.linalg.qr(C, mode="reduced")
    d = np.abs(np.diag(R))
    if d.min() == 0.0:
        raise SingularSystemError("least-squares columns are rank deficient", math.inf)
    cond = np.linalg.cond(R)
    if not cond <= cond_limit:
        raise SingularSystemError("least-squares system is numerically singular", cond)
    return np.linalg.solve(R, Q.T @ b)
