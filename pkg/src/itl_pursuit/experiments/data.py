"""Synthetic problem generators and corruption models.

All generators take an integer seed and draw from
``numpy.random.default_rng(seed)``, so equal seeds give bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..core import Dictionary, as_signal
from ..errors import InvalidParameterError, ShapeError

NOISE_KINDS = ("chi2", "exp", "tdist", "gaussian", "wgn", "missing", "none")

GAUSSIAN_STD = 0.5
T_DF = 3


@dataclass(frozen=True)
class NoiseSpec:
    """Corruption applied to a clean observation.

    Attributes
    ----------
    kind : str
        ``chi2`` (1 dof), ``exp`` (mean 1), ``tdist`` (3 dof), ``gaussian``
        (std 0.5), ``wgn`` (white Gaussian at ``snr_db``), ``missing``
        (``fraction`` of entries zeroed) or ``none``.
    snr_db : float
        Target SNR of ``wgn`` in decibels, ``10 log10(||clean||^2 / ||noise||^2)``.
    fraction : float
        Share of entries zeroed by ``missing``.
    outlier_count : int
        Number of distinct entries receiving an additive ``+-magnitude * sigma_g``
        spike after the main corruption.
    outlier_magnitude_sigmas : float
        Spike size in units of ``sigma_g``: the standard deviation of the
        additive noise draw, or of the clean signal when there is none.
    """

    kind: str = "none"
    snr_db: float = 2.0
    fraction: float = 0.1
    outlier_count: int = 0
    outlier_magnitude_sigmas: float = 30.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidParameterError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise InvalidParameterError(f"missing fraction must be in [0, 1], got {self.fraction}")
        if not np.isfinite(self.snr_db):
            raise InvalidParameterError("snr_db must be finite")
        if self.outlier_count < 0:
            raise InvalidParameterError("outlier_count must be >= 0")
        if not np.isfinite(self.outlier_magnitude_sigmas):
            raise InvalidParameterError("outlier_magnitude_sigmas must be finite")

    @property
    def label(self) -> str:
        if self.kind == "wgn":
            base = f"wgn{self.snr_db:g}dB"
        elif self.kind == "missing":
            base = f"missing{self.fraction:g}"
        else:
            base = self.kind
        if self.outlier_count:
            base += f"+out{self.outlier_count}x{self.outlier_magnitude_sigmas:g}"
        return base


def gen_dictionary(m: int, n: int, seed: int) -> Dictionary:
    """``m x n`` dictionary of iid standard normal entries."""
    if m < 1 or n < 1:
        raise InvalidParameterError(f"dictionary shape must be positive, got ({m}, {n})")
    return Dictionary(np.random.default_rng(seed).standard_normal((m, n)))


def gen_sparse_vector(n: int, k: int, seed: int) -> np.ndarray:
    """Length-``n`` vector with ``k`` nonzeros of magnitude in ``[1, 2]`` and random sign."""
    if not 1 <= k <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    idx = rng.choice(n, size=k, replace=False)
    x[idx] = rng.uniform(1.0, 2.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    return x


def _additive(kind, m, rng):
    if kind == "chi2":
        return rng.chisquare(1, size=m)
    if kind == "exp":
        return rng.exponential(1.0, size=m)
    if kind == "tdist":
        return rng.standard_t(T_DF, size=m)
    if kind == "gaussian":
        return GAUSSIAN_STD * rng.standard_normal(m)
    return None


def corrupt(clean, spec: NoiseSpec, seed: int) -> np.ndarray:
    """Apply ``spec`` to ``clean`` and return the corrupted copy."""
    b = np.array(as_signal(clean, "clean"))
    m = b.size
    rng = np.random.default_rng(seed)
    noise = _additive(spec.kind, m, rng)
    if spec.kind == "wgn":
        power = float(b @ b)
        if power == 0.0:
            raise InvalidParameterError("wgn needs a nonzero clean signal to set the SNR")
        noise = rng.standard_normal(m)
        noise *= np.sqrt(power / 10.0 ** (spec.snr_db / 10.0) / float(noise @ noise))
    if noise is not None:
        sigma_g = float(np.std(noise))
        b = b + noise
    else:
        sigma_g = float(np.std(clean))
    if spec.kind == "missing":
        count = int(round(spec.fraction * m))
        b[rng.choice(m, size=count, replace=False)] = 0.0
    if spec.outlier_count:
        if spec.outlier_count > m:
            raise InvalidParameterError(f"{spec.outlier_count} outliers for a length-{m} signal")
        idx = rng.choice(m, size=spec.outlier_count, replace=False)
        signs = rng.choice([-1.0, 1.0], size=spec.outlier_count)
        b[idx] += signs * spec.outlier_magnitude_sigmas * sigma_g
    return b


def snr_db(clean, noisy) -> float:
    """Empirical SNR ``10 log10(||clean||^2 / ||noisy - clean||^2)``."""
    clean = np.asarray(clean, dtype=np.float64)
    d = np.asarray(noisy, dtype=np.float64) - clean
    return 10.0 * np.log10(float(clean @ clean) / float(d @ d))


def recovery_error(estimate, truth) -> float:
    """Euclidean distance between estimated and true coefficient vectors."""
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise ShapeError(f"shapes {estimate.shape} and {truth.shape} differ")
    return float(np.linalg.norm(estimate - truth))


def synthetic_patch(height: int, width: int) -> np.ndarray:
    """Fixed textured patch with values in ``[0, 1]``, used as an occluder."""
    i, j = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    tex = np.sin(0.9 * i) * np.cos(0.7 * j) + 0.5 * np.sin(0.31 * (i + 2 * j))
    lo, hi = tex.min(), tex.max()
    return (tex - lo) / (hi - lo) if hi > lo else np.full(tex.shape, 0.5)


def occlusion_block(
    image_signal,
    rows: int,
    cols: int,
    block: Tuple[int, int, Union[str, float]],
    seed: int,
) -> np.ndarray:
    """Overwrite a random rectangle of a row-major ``rows x cols`` image.

    ``block`` is ``(height, width, fill)`` where ``fill`` is ``"random"``
    (uniform ``[0, 1]`` values), ``"patch"`` (:func:`synthetic_patch`) or a
    number for a constant block.
    """
    img = np.array(as_signal(image_signal, "image_signal"))
    if img.size != rows * cols:
        raise ShapeError(f"signal of length {img.size} is not a {rows}x{cols} grid")
    h, w, fill = block
    if h < 0 or w < 0 or h > rows or w > cols:
        raise InvalidParameterError(f"{h}x{w} block does not fit a {rows}x{cols} grid")
    if h == 0 or w == 0:
        return img
    rng = np.random.default_rng(seed)
    top = int(rng.integers(0, rows - h + 1))
    left = int(rng.integers(0, cols - w + 1))
    if isinstance(fill, str):
        if fill == "random":
            values = rng.uniform(0.0, 1.0, size=(h, w))
        elif fill == "patch":
            values = synthetic_patch(h, w)
        else:
            raise InvalidParameterError(f"unknown fill {fill!r}")
    else:
        values = np.full((h, w), float(fill))
    grid = img.reshape(rows, cols)
    grid[top:top + h, left:left + w] = values
    return grid.reshape(-1)
