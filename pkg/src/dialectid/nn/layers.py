"""Dense layers: linear, 1-D/2-D convolution, batch norm, activations.

Convolutions use cross-correlation semantics with zero padding; spatial output
size is floor((in + 2*pad - k_eff) / stride) + 1. The im2col buffers are
rebuilt during backward instead of cached, trading a strided copy for a large
cut in peak memory.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateBatchError, DimensionError
from .core import Module, Parameter, he_uniform


def _as_pair(v):
    return tuple(v) if isinstance(v, (tuple, list)) else (v, v)


class Linear(Module):
    def __init__(self, in_features, out_features, bias=True, rng=None, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        rng = rng or np.random.default_rng(0)
        self.weight = Parameter(he_uniform(rng, (out_features, in_features), in_features, dtype))
        self.bias = Parameter(np.zeros(out_features, dtype=dtype)) if bias else None

    def forward(self, x):
        if x.shape[-1] != self.in_features:
            raise DimensionError(
                f"linear expects {self.in_features} input features, got {x.shape[-1]}"
            )
        self._x = x
        y = x @ self.weight.value.T
        if self.bias is not None:
            y = y + self.bias.value
        return y

    def backward(self, grad):
        self.weight.grad += grad.T @ self._x
        if self.bias is not None:
            self.bias.grad += grad.sum(axis=0)
        return grad @ self.weight.value


def _im2col1d(x, k, stride, pad, dilation):
    b, c, t = x.shape
    eff = dilation * (k - 1) + 1
    out_t = (t + 2 * pad - eff) // stride + 1
    if out_t < 1:
        raise DimensionError(f"conv1d input of length {t} too short for kernel span {eff}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    if k == 1:
        # no gather needed; a (possibly strided) view feeds matmul directly
        return xp[:, :, : stride * out_t : stride], out_t
    cols = np.empty((b, c, k, out_t), dtype=x.dtype)
    for j in range(k):
        start = j * dilation
        cols[:, :, j, :] = xp[:, :, start : start + stride * out_t : stride]
    return cols.reshape(b, c * k, out_t), out_t


def _col2im1d(dcol, x_shape, k, stride, pad, dilation, out_t):
    b, c, t = x_shape
    if k == 1 and stride == 1 and pad == 0:
        return dcol
    dcols = dcol.reshape(b, c, k, out_t)
    dxp = np.zeros((b, c, t + 2 * pad), dtype=dcol.dtype)
    for j in range(k):
        start = j * dilation
        dxp[:, :, start : start + stride * out_t : stride] += dcols[:, :, j, :]
    return dxp[:, :, pad : pad + t] if pad else dxp


class Conv1d(Module):
    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0,
                 dilation=1, bias=True, rng=None, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.dilation = dilation
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel_size
        self.weight = Parameter(
            he_uniform(rng, (out_channels, in_channels, kernel_size), fan_in, dtype)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype)) if bias else None

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise DimensionError(
                f"conv1d expects (B, {self.in_channels}, T), got {x.shape}"
            )
        self._x = x
        col, out_t = _im2col1d(x, self.kernel_size, self.stride, self.padding, self.dilation)
        self._out_t = out_t
        w2 = self.weight.value.reshape(self.out_channels, -1)
        y = np.matmul(w2, col)
        if self.bias is not None:
            y += self.bias.value[:, None]
        return y

    def backward(self, grad):
        col, _ = _im2col1d(self._x, self.kernel_size, self.stride, self.padding, self.dilation)
        self.weight.grad += np.tensordot(grad, col, axes=([0, 2], [0, 2])).reshape(
            self.weight.shape
        )
        if self.bias is not None:
            self.bias.grad += grad.sum(axis=(0, 2))
        dcol = np.matmul(self.weight.value.reshape(self.out_channels, -1).T, grad)
        return _col2im1d(dcol, self._x.shape, self.kernel_size, self.stride,
                         self.padding, self.dilation, self._out_t)


def _im2col2d(x, kh, kw, sh, sw, ph, pw):
    b, c, h, w = x.shape
    oh = (h + 2 * ph - kh) // sh + 1
    ow = (w + 2 * pw - kw) // sw + 1
    if oh < 1 or ow < 1:
        raise DimensionError(f"conv2d input {h}x{w} too small for kernel {kh}x{kw}")
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else x
    if kh == kw == 1 and sh == sw == 1:
        return xp.reshape(b, c, oh * ow), oh, ow
    cols = np.empty((b, c, kh, kw, oh, ow), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + sh * oh : sh, j : j + sw * ow : sw]
    return cols.reshape(b, c * kh * kw, oh * ow), oh, ow


def _col2im2d(dcol, x_shape, kh, kw, sh, sw, ph, pw, oh, ow):
    b, c, h, w = x_shape
    if kh == kw == 1 and sh == sw == 1 and ph == pw == 0:
        return dcol.reshape(b, c, h, w)
    dcols = dcol.reshape(b, c, kh, kw, oh, ow)
    dxp = np.zeros((b, c, h + 2 * ph, w + 2 * pw), dtype=dcol.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i : i + sh * oh : sh, j : j + sw * ow : sw] += dcols[:, :, i, j]
    return dxp[:, :, ph : ph + h, pw : pw + w] if (ph or pw) else dxp


class Conv2d(Module):
    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0,
                 bias=True, rng=None, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = _as_pair(kernel_size)
        self.stride = _as_pair(stride)
        self.padding = _as_pair(padding)
        rng = rng or np.random.default_rng(0)
        kh, kw = self.kernel_size
        fan_in = in_channels * kh * kw
        self.weight = Parameter(
            he_uniform(rng, (out_channels, in_channels, kh, kw), fan_in, dtype)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype)) if bias else None

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError(
                f"conv2d expects (B, {self.in_channels}, H, W), got {x.shape}"
            )
        self._x = x
        col, oh, ow = _im2col2d(x, *self.kernel_size, *self.stride, *self.padding)
        self._oh, self._ow = oh, ow
        w2 = self.weight.value.reshape(self.out_channels, -1)
        y = np.matmul(w2, col)
        if self.bias is not None:
            y += self.bias.value[:, None]
        return y.reshape(x.shape[0], self.out_channels, oh, ow)

    def backward(self, grad):
        b = grad.shape[0]
        g2 = grad.reshape(b, self.out_channels, self._oh * self._ow)
        col, _, _ = _im2col2d(self._x, *self.kernel_size, *self.stride, *self.padding)
        self.weight.grad += np.tensordot(g2, col, axes=([0, 2], [0, 2])).reshape(
            self.weight.shape
        )
        if self.bias is not None:
            self.bias.grad += grad.sum(axis=(0, 2, 3))
        dcol = np.matmul(self.weight.value.reshape(self.out_channels, -1).T, g2)
        return _col2im2d(dcol, self._x.shape, *self.kernel_size, *self.stride,
                         *self.padding, self._oh, self._ow)


class BatchNorm(Module):
    """Per-channel batch normalization for (B, C), (B, C, T) or (B, C, H, W).

    Train mode normalizes by the batch's population statistics and updates the
    running buffers as running = momentum * running + (1 - momentum) * batch;
    eval mode normalizes by the running buffers.
    """

    def __init__(self, num_features, momentum=0.9, eps=1e-5, dtype=np.float32):
        super().__init__()
        self.num_features = num_features
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(num_features, dtype=dtype))
        self.beta = Parameter(np.zeros(num_features, dtype=dtype))
        self.register_buffer("running_mean", np.zeros(num_features, dtype=dtype))
        self.register_buffer("running_var", np.ones(num_features, dtype=dtype))

    def _bshape(self, ndim):
        return (1, self.num_features) + (1,) * (ndim - 2)

    def forward(self, x):
        if x.ndim < 2 or x.shape[1] != self.num_features:
            raise DimensionError(
                f"batch norm over {self.num_features} channels got shape {x.shape}"
            )
        axes = (0,) + tuple(range(2, x.ndim))
        shape = self._bshape(x.ndim)
        if self.training:
            if x.shape[0] < 2:
                raise DegenerateBatchError(
                    "batch statistics need at least 2 items in train mode"
                )
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.running_mean[...] = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var[...] = self.momentum * self.running_var + (1 - self.momentum) * var
        else:
            mean = self.running_mean.astype(x.dtype)
            var = self.running_var.astype(x.dtype)
        ivar = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean.reshape(shape)) * ivar.reshape(shape)
        self._xhat, self._ivar, self._axes, self._n = (
            xhat,
            ivar,
            axes,
            x.size // self.num_features,
        )
        return self.gamma.value.reshape(shape) * xhat + self.beta.value.reshape(shape)

    def backward(self, grad):
        shape = self._bshape(grad.ndim)
        axes = self._axes
        xhat, ivar, n = self._xhat, self._ivar, self._n
        self.gamma.grad += (grad * xhat).sum(axis=axes)
        self.beta.grad += grad.sum(axis=axes)
        gxhat = grad * self.gamma.value.reshape(shape)
        if not self.training:
            return gxhat * ivar.reshape(shape)
        gsum = gxhat.sum(axis=axes, keepdims=True)
        gdot = (gxhat * xhat).sum(axis=axes, keepdims=True)
        return (ivar.reshape(shape) / n) * (n * gxhat - gsum - xhat * gdot)


class ReLU(Module):
    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad):
        return grad * self._mask


class Tanh(Module):
    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad):
        return grad * (1.0 - self._y * self._y)


class Sigmoid(Module):
    def forward(self, x):
        self._y = 1.0 / (1.0 + np.exp(-x))
        return self._y

    def backward(self, grad):
        return grad * self._y * (1.0 - self._y)
