"""Adam optimizer with bias correction, operating in place on parameter arrays."""

from __future__ import annotations

import numpy as np

from holab.errors import DataError


class Adam:
    """Standard Adam; moment buffers mirror the parameter shapes."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise DataError("gradient list length does not match parameters")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise DataError("gradient shape does not match parameter shape")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / bc1
            v_hat = v / bc2
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: Adam) -> list[np.ndarray]:
    """Functional wrapper: apply one update through an Adam state object."""
    if state.params is not params and any(p is not q for p, q in zip(params, state.params)):
        raise DataError("adam state was created for different parameter arrays")
    state.step(grads)
    return params
