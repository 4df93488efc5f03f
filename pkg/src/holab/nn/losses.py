"""Mean squared error and its gradient."""

from __future__ import annotations

import numpy as np

from holab.errors import DataError


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean of squared differences over all elements."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise DataError(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d(mse)/d(pred)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise DataError(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    return 2.0 * (pred - target) / pred.size
