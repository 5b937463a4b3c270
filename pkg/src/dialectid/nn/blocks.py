"""Channel-gating and multi-scale convolution blocks for the 1-D encoder."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .core import Module, ModuleList, Parameter, he_uniform
from .layers import Conv1d


class SEBlock(Module):
    """Squeeze-and-excitation channel gating over (B, C, T).

    Global average over time -> bottleneck ReLU layer -> sigmoid gates in
    (0, 1), multiplied back into every frame.
    """

    def __init__(self, channels, bottleneck=128, rng=None, dtype=np.float32):
        super().__init__()
        self.channels = channels
        rng = rng or np.random.default_rng(0)
        self.w_squeeze = Parameter(he_uniform(rng, (bottleneck, channels), channels, dtype))
        self.b_squeeze = Parameter(np.zeros(bottleneck, dtype=dtype))
        self.w_gate = Parameter(he_uniform(rng, (channels, bottleneck), bottleneck, dtype))
        self.b_gate = Parameter(np.zeros(channels, dtype=dtype))

    def forward(self, x):
        t = x.shape[2]
        s = x.mean(axis=2)
        u = s @ self.w_squeeze.value.T + self.b_squeeze.value
        u_relu = np.maximum(u, 0.0)
        g = 1.0 / (1.0 + np.exp(-(u_relu @ self.w_gate.value.T + self.b_gate.value)))
        self._x, self._s, self._u_relu, self._g, self._t = x, s, u_relu, g, t
        return x * g[:, :, None]

    def backward(self, grad):
        x, s, u_relu, g, t = self._x, self._s, self._u_relu, self._g, self._t
        gx = grad * g[:, :, None]
        ggate = (grad * x).sum(axis=2)
        gz2 = ggate * g * (1.0 - g)
        self.w_gate.grad += gz2.T @ u_relu
        self.b_gate.grad += gz2.sum(axis=0)
        gu = (gz2 @ self.w_gate.value) * (u_relu > 0)
        self.w_squeeze.grad += gu.T @ s
        self.b_squeeze.grad += gu.sum(axis=0)
        gs = gu @ self.w_squeeze.value
        gx += gs[:, :, None] / t
        return gx


class Res2Block(Module):
    """Hierarchical multi-scale convolution over channel groups.

    Channels split into `scale` groups; group 0 passes through, group 1 is
    convolved, and each later group is convolved after adding the previous
    group's output. Kernel size 3 with the given dilation, length-preserving
    padding.
    """

    def __init__(self, channels, scale=8, kernel_size=3, dilation=1, rng=None, dtype=np.float32):
        super().__init__()
        if channels % scale != 0:
            raise ConfigurationError(
                f"channels ({channels}) must be divisible by scale ({scale})"
            )
        self.channels = channels
        self.scale = scale
        self.width = channels // scale
        rng = rng or np.random.default_rng(0)
        pad = dilation * (kernel_size - 1) // 2
        self.convs = ModuleList(
            Conv1d(self.width, self.width, kernel_size, padding=pad, dilation=dilation,
                   rng=rng, dtype=dtype)
            for _ in range(scale - 1)
        )

    def forward(self, x):
        w = self.width
        groups = [x[:, i * w : (i + 1) * w, :] for i in range(self.scale)]
        outs = [groups[0]]
        prev = None
        for i in range(1, self.scale):
            inp = groups[i] if prev is None else groups[i] + prev
            prev = self.convs[i - 1].forward(inp)
            outs.append(prev)
        return np.concatenate(outs, axis=1)

    def backward(self, grad):
        w = self.width
        ggroups = [grad[:, i * w : (i + 1) * w, :].copy() for i in range(self.scale)]
        gx = [None] * self.scale
        for i in range(self.scale - 1, 0, -1):
            gin = self.convs[i - 1].backward(ggroups[i])
            gx[i] = gin
            if i > 1:
                ggroups[i - 1] += gin
        gx[0] = ggroups[0]
        return np.concatenate(gx, axis=1)
