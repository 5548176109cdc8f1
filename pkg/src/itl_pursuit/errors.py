"""Exception hierarchy shared by every solver module."""

import numpy as np


class PursuitError(Exception):
    """Base class for all errors raised by :mod:`itl_pursuit`."""


class InvalidParameterError(PursuitError, ValueError):
    """A scalar parameter (kernel width, power, fraction, ...) is out of range."""


class ShapeError(PursuitError, ValueError):
    """Operands have incompatible dimensions."""


class InvalidAtomError(InvalidParameterError):
    """A dictionary atom is the zero vector."""


class InvalidSignalError(InvalidParameterError):
    """A signal is empty, non-finite, or zero where a nonzero one is required."""


class ConfigurationError(PursuitError, ValueError):
    """A solver or classifier configuration is inconsistent."""


class EmptyCandidateError(PursuitError):
    """Every atom of the dictionary is excluded from the sweep."""


class SingularSystemError(PursuitError, np.linalg.LinAlgError):
    """A least-squares system is rank deficient or numerically singular.

    Attributes
    ----------
    condition : float
        Condition-number estimate of the offending system (``inf`` when a
        column vanishes entirely).
    """

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition
