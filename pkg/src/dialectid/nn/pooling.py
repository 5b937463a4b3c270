"""Time pooling: plain and attention-weighted statistics.

Both map (B, C, T) frame sequences to (B, 2C) vectors by concatenating a
per-channel location statistic (mean) with a spread statistic (standard
deviation by default, variance behind the flag). Population variance, no
Bessel correction.
"""

from __future__ import annotations

import numpy as np

from .core import Module, Parameter, he_uniform

POOL_EPS = 1e-8


def statistics_pooling(frames: np.ndarray, use_variance: bool = False) -> np.ndarray:
    """Functional form over a single utterance's (T, C) frames -> (2C,)."""
    mean = frames.mean(axis=0)
    var = frames.var(axis=0)
    spread = var if use_variance else np.sqrt(var + POOL_EPS)
    return np.concatenate([mean, spread])


class StatisticsPooling(Module):
    def __init__(self, use_variance: bool = False):
        super().__init__()
        self.use_variance = use_variance

    def forward(self, x):
        b, c, t = x.shape
        mean = x.mean(axis=2)
        var = x.var(axis=2)
        sigma = np.sqrt(var + POOL_EPS)
        self._x, self._mean, self._sigma, self._t = x, mean, sigma, t
        spread = var if self.use_variance else sigma
        return np.concatenate([mean, spread], axis=1)

    def backward(self, grad):
        c = self._mean.shape[1]
        gmean, gspread = grad[:, :c], grad[:, c:]
        xc = self._x - self._mean[:, :, None]
        if self.use_variance:
            gvar = gspread
        else:
            gvar = gspread / (2.0 * self._sigma)
        return (gmean[:, :, None] + 2.0 * gvar[:, :, None] * xc) / self._t


class AttentiveStatisticsPooling(Module):
    """Statistics pooling with channel-dependent softmax frame attention.

    A two-layer tanh network scores every (frame, channel) pair; the scores
    are softmax-normalized over frames and weight both the mean and the
    spread. The output layer starts at zero so the first forward pass is
    exactly uniform attention, i.e. plain statistics pooling.
    """

    def __init__(self, channels, attn_dim=128, use_variance=False, rng=None, dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.attn_dim = attn_dim
        self.use_variance = use_variance
        rng = rng or np.random.default_rng(0)
        self.w_in = Parameter(he_uniform(rng, (attn_dim, channels), channels, dtype))
        self.b_in = Parameter(np.zeros(attn_dim, dtype=dtype))
        self.w_out = Parameter(np.zeros((channels, attn_dim), dtype=dtype))
        self.b_out = Parameter(np.zeros(channels, dtype=dtype))

    def attention_weights(self, x):
        """(B, C, T) softmax-over-T weights; also caches for backward."""
        h = np.tanh(np.matmul(self.w_in.value, x) + self.b_in.value[:, None])
        logits = np.matmul(self.w_out.value, h) + self.b_out.value[:, None]
        logits = logits - logits.max(axis=2, keepdims=True)
        expl = np.exp(logits)
        alpha = expl / expl.sum(axis=2, keepdims=True)
        self._h, self._alpha = h, alpha
        return alpha

    def forward(self, x):
        alpha = self.attention_weights(x)
        mean = (alpha * x).sum(axis=2)
        m2 = (alpha * x * x).sum(axis=2)
        var = m2 - mean * mean
        sigma = np.sqrt(np.maximum(var, 0.0) + POOL_EPS)
        self._x, self._mean, self._sigma = x, mean, sigma
        spread = var if self.use_variance else sigma
        return np.concatenate([mean, spread], axis=1)

    def backward(self, grad):
        x, alpha, h = self._x, self._alpha, self._h
        mean, sigma = self._mean, self._sigma
        c = self.channels
        gmean, gspread = grad[:, :c], grad[:, c:]
        if self.use_variance:
            gm2 = gspread
        else:
            gm2 = gspread / (2.0 * sigma)
        gmean_eff = gmean - 2.0 * gm2 * mean

        gx = alpha * (gmean_eff[:, :, None] + 2.0 * gm2[:, :, None] * x)
        galpha = gmean_eff[:, :, None] * x + gm2[:, :, None] * (x * x)

        # softmax over T, independently per (batch, channel)
        glogits = alpha * (galpha - (alpha * galpha).sum(axis=2, keepdims=True))

        self.b_out.grad += glogits.sum(axis=(0, 2))
        self.w_out.grad += np.einsum("bct,bat->ca", glogits, h)
        gh = np.matmul(self.w_out.value.T, glogits)
        gpre = gh * (1.0 - h * h)
        self.b_in.grad += gpre.sum(axis=(0, 2))
        self.w_in.grad += np.einsum("bat,bct->ac", gpre, x)
        gx += np.matmul(self.w_in.value.T, gpre)
        return gx
