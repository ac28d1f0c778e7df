# lrgmp - First-order optimizers over named parameter arrays
# AGPL-3.0-or-later
#
# Parameters are a dict name -> ndarray updated in place; gradients use the
# same names. Keys are visited in sorted order so runs are reproducible.

import numpy as np

from lrgmp.config import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, SGD_MOMENTUM
from lrgmp.errors import ConfigError


class Sgd:
    """Gradient descent with heavy-ball momentum."""

    def __init__(self, lr: float, momentum: float = SGD_MOMENTUM):
        if lr < 0 or not 0.0 <= momentum < 1.0:
            raise ConfigError(f"invalid SGD settings lr={lr}, momentum={momentum}")
        self.lr = lr
        self.momentum = momentum
        self._velocity: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        for name in sorted(grads):
            vel = self._velocity.get(name)
            vel = grads[name].copy() if vel is None else self.momentum * vel + grads[name]
            self._velocity[name] = vel
            params[name] -= self.lr * vel


class Adam:
    """Adam with bias-corrected first and second moments."""

    def __init__(self, lr: float, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                 eps: float = ADAM_EPS):
        if lr < 0 or not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0) or eps <= 0:
            raise ConfigError(f"invalid Adam settings lr={lr}, betas=({beta1}, {beta2}), eps={eps}")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self._t += 1
        c1 = 1.0 - self.beta1 ** self._t
        c2 = 1.0 - self.beta2 ** self._t
        for name in sorted(grads):
            g = grads[name]
            m = self.beta1 * self._m.get(name, 0.0) + (1.0 - self.beta1) * g
            v = self.beta2 * self._v.get(name, 0.0) + (1.0 - self.beta2) * g * g
            self._m[name], self._v[name] = m, v
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
