"""Adam optimizer over flat parameter lists."""

import numpy as np

from ..errors import TrainingError


class AdamState:
    """Moment accumulators shaped like the parameter list."""

    def __init__(self, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def copy(self):
        fresh = AdamState([], lr=self.lr, beta1=self.beta1,
                          beta2=self.beta2, eps=self.eps)
        fresh.m = [m.copy() for m in self.m]
        fresh.v = [v.copy() for v in self.v]
        fresh.t = self.t
        return fresh


def adam_step(params, grads, state):
    """One bias-corrected Adam update, in place.

    Returns (params, state) for call-site clarity; both are the inputs,
    mutated.  Raises TrainingError on any non-finite gradient.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.t
    corr2 = 1.0 - b2 ** state.t
    step = state.lr / corr1
    for i, (p, g) in enumerate(zip(params, grads)):
        if not np.isfinite(g).all():
            raise TrainingError(
                f"non-finite gradient in parameter {i} (shape {p.shape}) "
                f"at optimizer step {state.t}")
        m = state.m[i]
        v = state.v[i]
        m += (1.0 - b1) * (g - m)
        v += (1.0 - b2) * (g * g - v)
        p -= step * m / (np.sqrt(v / corr2) + state.eps)
    return params, state
