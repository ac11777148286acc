"""Adam optimizer over flat real parameter arrays."""

from __future__ import annotations

import numpy as np

from ..errors import AtfnetError


def adam_step(data, grad, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place update of a single parameter array.

    ``m``/``v`` are the running first/second moment buffers; ``t`` is the
    1-based step count used for bias correction. Complex plane-stored
    parameters are just flat reals here.
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    data -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        for p, m, v in zip(self.params, self._m, self._v):
            grad = p.grad if p.grad is not None else np.zeros_like(p.data)
            adam_step(p.data, grad, m, v, self.t,
                      self.lr, self.beta1, self.beta2, self.eps)
            if not np.all(np.isfinite(p.data)):
                raise AtfnetError(f"parameter {p.name!r} became non-finite")
