"""Adam optimizer with bias-corrected first and second moments.

Per step t (1-based), for each parameter with gradient g:

    m <- beta1 * m + (1 - beta1) * g
    v <- beta2 * v + (1 - beta2) * g^2
    m_hat = m / (1 - beta1^t)
    v_hat = v / (1 - beta2^t)
    value <- value - lr * m_hat / (sqrt(v_hat) + eps)

Moments live on the Parameter objects and are zero before the first step.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteGradientError


class Adam:
    def __init__(self, parameters, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.parameters = list(parameters)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def zero_grad(self) -> None:
        for p in self.parameters:
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p in self.parameters:
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(f"non-finite gradient in {p.name}")
            p.adam_m *= self.beta1
            p.adam_m += (1.0 - self.beta1) * g
            p.adam_v *= self.beta2
            p.adam_v += (1.0 - self.beta2) * (g * g)
            m_hat = p.adam_m / bc1
            v_hat = p.adam_v / bc2
            p.value -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.value.dtype, copy=False)
