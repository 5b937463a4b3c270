"""Adam optimizer over the named parameters of a module tree.

Moment buffers are keyed by dotted parameter name so they can round-trip
through checkpoints without relying on iteration order of the module tree.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..nn.core import Module


class Adam:
    def __init__(
        self,
        model: Module,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ConfigurationError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        if eps <= 0.0:
            raise ConfigurationError(f"eps must be positive, got {eps}")
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._params = [(name, p) for name, p in model.named_parameters() if p.trainable]
        self.m = {name: np.zeros_like(p.value) for name, p in self._params}
        self.v = {name: np.zeros_like(p.value) for name, p in self._params}

    def step(self, lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in self._params:
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_dict(self) -> dict:
        return {
            "t": self.t,
            "m": {name: arr.copy() for name, arr in self.m.items()},
            "v": {name: arr.copy() for name, arr in self.v.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        if set(state["m"]) != set(self.m) or set(state["v"]) != set(self.v):
            raise ConfigurationError("optimizer state does not match model parameters")
        self.t = int(state["t"])
        for name, _ in self._params:
            for mine, theirs in ((self.m, state["m"]), (self.v, state["v"])):
                arr = np.asarray(theirs[name], dtype=mine[name].dtype)
                if arr.shape != mine[name].shape:
                    raise ConfigurationError(
                        f"moment shape mismatch for {name!r}: "
                        f"{arr.shape} vs {mine[name].shape}"
                    )
                mine[name] = arr.copy()
