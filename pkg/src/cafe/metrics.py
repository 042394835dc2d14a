"""Reconstruction metrics and the fixed-basis least-squares floor."""

from __future__ import annotations

import math

import numpy as np

from . import encodings as enc
from .errors import BudgetExceeded, ShapeError

PSNR_CAP = 99.0


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def psnr(pred, gt, cap: bool = True) -> float:
    """PSNR in dB for signals in [0, 1] (peak 1).

    Predictions are clamped to [0, 1] first. A perfect match is +inf, or
    ``PSNR_CAP`` (99 dB) when ``cap`` is set.
    """
    p, g = _values(pred), _values(gt)
    if p.shape != g.shape:
        raise ShapeError(f"psnr: shape mismatch {p.shape} vs {g.shape}")
    err = float(np.mean((np.clip(p, 0.0, 1.0) - g) ** 2))
    return psnr_from_mse(err, cap)


def psnr_from_mse(mse: float, cap: bool = True) -> float:
    if mse <= 0:
        return PSNR_CAP if cap else math.inf
    value = -10.0 * math.log10(mse)
    return min(value, PSNR_CAP) if cap else value


def iou(pred, gt, threshold: float = 0.5) -> float:
    """Intersection over union of two occupancy grids.

    ``pred`` may hold raw network outputs; cells at or above ``threshold``
    count as occupied. Two empty grids give 1.0.
    """
    p, g = _values(pred), _values(gt)
    if p.shape != g.shape:
        raise ShapeError(f"iou: shape mismatch {p.shape} vs {g.shape}")
    pb, gb = p >= threshold, g >= threshold
    union = np.count_nonzero(pb | gb)
    if union == 0:
        return 1.0
    return np.count_nonzero(pb & gb) / union


def least_squares_floor(basis: enc.FrequencyBasis, coords, targets, ridge: float = 1e-10,
                        max_entries: int = 5 * 10**7) -> float:
    """Smallest MSE a linear readout of ``[Fourier features, 1]`` can reach.

    Solves the ridge-regularised normal equations and returns the residual
    mean squared error over all target entries.
    """
    X = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    Y = np.asarray(targets, dtype=np.float64).reshape(X.shape[0], -1)
    A = np.column_stack([enc.fourier_encode(X, basis).values, np.ones(X.shape[0])])
    if A.size > max_entries:
        raise BudgetExceeded(f"design matrix with {A.size} entries exceeds {max_entries}")
    gram = A.T @ A + ridge * np.eye(A.shape[1])
    coef = np.linalg.solve(gram, A.T @ Y)
    resid = Y - A @ coef
    return float(np.mean(resid ** 2))
