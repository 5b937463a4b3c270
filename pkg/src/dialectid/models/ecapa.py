"""ECAPA-TDNN dialect classifier over (channel x time) feature sequences.

A kernel-5 stem expands the input to the working width, three SE-Res2
blocks with dilations 2, 3, 4 refine it, and their outputs are concatenated
(multi-layer feature aggregation) into a 1x1 conv. Attentive statistics
pooling collapses time and a linear layer produces the embedding. Kernel
sizes and dilations follow the architecture's defining description.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..nn import (
    AamConfig,
    AamHead,
    AttentiveStatisticsPooling,
    BatchNorm,
    Conv1d,
    Linear,
    Module,
    ModuleList,
    ReLU,
    Res2Block,
    SEBlock,
)
from .base import Model


@dataclass(frozen=True)
class EcapaConfig:
    n_classes: int
    in_dim: int = 80
    channels: int = 512
    se_dim: int = 128
    attn_dim: int = 128
    res2_scale: int = 8
    embed_dim: int = 192
    aam_scale: float = 30.0
    aam_margin: float = 0.4
    pool_use_variance: bool = False

    def __post_init__(self):
        if self.channels % self.res2_scale != 0:
            raise ConfigurationError(
                f"channels ({self.channels}) must divide by res2_scale ({self.res2_scale})"
            )
        if self.in_dim < 1 or self.embed_dim < 1:
            raise ConfigurationError("dimensions must be positive")


class TdnnBlock(Module):
    """Conv1d -> ReLU -> BatchNorm with length-preserving padding."""

    def __init__(self, in_ch, out_ch, kernel_size, dilation=1, rng=None, dtype=np.float32):
        super().__init__()
        pad = dilation * (kernel_size - 1) // 2
        self.conv = Conv1d(in_ch, out_ch, kernel_size, padding=pad,
                           dilation=dilation, rng=rng, dtype=dtype)
        self.relu = ReLU()
        self.bn = BatchNorm(out_ch, dtype=dtype)

    def forward(self, x):
        return self.bn.forward(self.relu.forward(self.conv.forward(x)))

    def backward(self, grad):
        return self.conv.backward(self.relu.backward(self.bn.backward(grad)))


class SERes2Block(Module):
    """1x1 conv in, dilated Res2 core, 1x1 conv out, SE gating, residual add."""

    def __init__(self, channels, se_dim, scale, dilation, rng, dtype=np.float32):
        super().__init__()
        self.tdnn_in = TdnnBlock(channels, channels, 1, rng=rng, dtype=dtype)
        self.res2 = Res2Block(channels, scale=scale, kernel_size=3,
                              dilation=dilation, rng=rng, dtype=dtype)
        self.res2_relu = ReLU()
        self.res2_bn = BatchNorm(channels, dtype=dtype)
        self.tdnn_out = TdnnBlock(channels, channels, 1, rng=rng, dtype=dtype)
        self.se = SEBlock(channels, bottleneck=se_dim, rng=rng, dtype=dtype)

    def forward(self, x):
        h = self.tdnn_in.forward(x)
        h = self.res2_bn.forward(self.res2_relu.forward(self.res2.forward(h)))
        h = self.se.forward(self.tdnn_out.forward(h))
        return x + h

    def backward(self, grad):
        g = self.tdnn_out.backward(self.se.backward(grad))
        g = self.res2.backward(self.res2_relu.backward(self.res2_bn.backward(g)))
        return grad + self.tdnn_in.backward(g)


class Ecapa(Model):
    kind = "ecapa"

    def __init__(self, cfg: EcapaConfig, seed: int = 0, dtype=np.float32):
        super().__init__(cfg)
        rng = np.random.default_rng(seed)
        c = cfg.channels
        self.stem = TdnnBlock(cfg.in_dim, c, 5, rng=rng, dtype=dtype)
        self.blocks = ModuleList(
            SERes2Block(c, cfg.se_dim, cfg.res2_scale, dilation, rng, dtype)
            for dilation in (2, 3, 4)
        )
        cat = 3 * c
        self.mfa = Conv1d(cat, cat, 1, rng=rng, dtype=dtype)
        self.mfa_relu = ReLU()
        self.asp = AttentiveStatisticsPooling(
            cat, attn_dim=cfg.attn_dim, use_variance=cfg.pool_use_variance,
            rng=rng, dtype=dtype,
        )
        self.fc = Linear(2 * cat, cfg.embed_dim, rng=rng, dtype=dtype)
        self.head = AamHead(
            AamConfig(cfg.n_classes, cfg.embed_dim, cfg.aam_scale, cfg.aam_margin),
            rng=rng, dtype=dtype,
        )

    def embed(self, x):
        x = self.check_input(x)
        h = self.stem.forward(x)
        taps = []
        for block in self.blocks:
            h = block.forward(h)
            taps.append(h)
        cat = np.concatenate(taps, axis=1)
        pooled = self.asp.forward(self.mfa_relu.forward(self.mfa.forward(cat)))
        return self.fc.forward(pooled)

    def backward_embed(self, grad):
        g = self.mfa.backward(
            self.mfa_relu.backward(self.asp.backward(self.fc.backward(grad)))
        )
        c = self.cfg.channels
        gtaps = [g[:, i * c : (i + 1) * c, :] for i in range(3)]
        gh = gtaps[2]
        gh = self.blocks[2].backward(gh) + gtaps[1]
        gh = self.blocks[1].backward(gh) + gtaps[0]
        gh = self.blocks[0].backward(gh)
        return self.stem.backward(gh)


def build_ecapa(cfg: EcapaConfig, seed: int = 0) -> Ecapa:
    return Ecapa(cfg, seed)
