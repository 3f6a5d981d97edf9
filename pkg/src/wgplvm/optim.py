"""First-order adaptive gradient-ascent direction (moment / second-moment scheme)."""

from __future__ import annotations

import numpy as np


class AdamAscent:
    """Per-parameter adaptive steps from raw ascent gradients.

    Maintains exponentially decayed first and second gradient moments with
    the usual bias correction; ``direction`` returns the additive update for
    maximization.
    """

    def __init__(self, size: int, step: float = 1e-2, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.step = step
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m = np.zeros(size)
        self._v = np.zeros(size)
        self._t = 0

    def direction(self, grad: np.ndarray) -> np.ndarray:
        self._t += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * grad
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * grad ** 2
        m_hat = self._m / (1.0 - self.beta1 ** self._t)
        v_hat = self._v / (1.0 - self.beta2 ** self._t)
        return self.step * m_hat / (np.sqrt(v_hat) + self.eps)
