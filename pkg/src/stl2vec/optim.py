"""Adam updates for graph leaf parameters.

Standard bias-corrected Adam.  The state lives on the optimizer instance:
step count plus first/second moment accumulators shaped like each
parameter.  Parameters are updated in place; a parameter whose gradient
slot is None is treated as having zero gradient.
"""

import numpy as np


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) if isinstance(p.value, np.ndarray)
                  else 0.0 for p in self.params]
        self.v = [np.zeros_like(p.value) if isinstance(p.value, np.ndarray)
                  else 0.0 for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self, grads=None):
        """One Adam update from ``grads`` (default: the .grad slots)."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for i, p in enumerate(self.params):
            g = grads[i] if grads is not None else p.grad
            if g is None:
                g = np.zeros_like(p.value) if isinstance(p.value, np.ndarray) else 0.0
            if isinstance(p.value, np.ndarray):
                g = np.asarray(g, dtype=np.float64)
                if g.shape != p.value.shape:
                    raise ValueError("gradient shape %s does not match parameter %s"
                                     % (g.shape, p.value.shape))
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
                mhat = self.m[i] / bc1
                vhat = self.v[i] / bc2
                p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
            else:
                g = float(g)
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
                mhat = self.m[i] / bc1
                vhat = self.v[i] / bc2
                p.value = p.value - self.lr * mhat / (vhat ** 0.5 + self.eps)
