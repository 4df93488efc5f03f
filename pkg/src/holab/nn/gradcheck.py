"""Central finite-difference gradients, the independent oracle for backprop."""

from __future__ import annotations

from typing import Callable

import numpy as np


def numeric_gradients(loss_fn: Callable[[], float], arrays: list[np.ndarray],
                      eps: float = 1e-5) -> list[np.ndarray]:
    """Central differences of loss_fn with respect to every entry of each array.

    loss_fn must read the arrays in place (they are perturbed and restored);
    it must not cache state between calls.
    """
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = loss_fn()
            flat[j] = orig - eps
            down = loss_fn()
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * eps)
        grads.append(g)
    return grads


def max_relative_error(analytic: list[np.ndarray], numeric: list[np.ndarray],
                       floor: float = 1e-3) -> float:
    """Worst per-component relative error with a denominator floor.

    The floor keeps finite-difference noise on near-zero gradients from
    dominating; any real formula error shows up at O(0.1) or larger.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
