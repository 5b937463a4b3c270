"""ResNet-34 dialect classifier over (frequency x time) feature maps.

The stem is a 3x3 stride-1 convolution into the first stage's width (speech
feature maps are narrow in frequency, so the big-image 7x7/maxpool entry
would throw away most of the map). Four stages of basic blocks follow with
depths (3, 4, 6, 3); each stage transition halves both axes with a stride-2
first block and a 1x1 projection skip. The last feature map is flattened
channel-by-frequency, statistics-pooled over time, and projected to the
embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..nn import (
    AamConfig,
    AamHead,
    BatchNorm,
    Conv2d,
    Linear,
    ModuleList,
    Module,
    ReLU,
    StatisticsPooling,
)
from .base import Model


@dataclass(frozen=True)
class ResNetConfig:
    n_classes: int
    in_dim: int = 80
    stage_depths: tuple = (3, 4, 6, 3)
    stage_channels: tuple = (32, 64, 128, 256)
    embed_dim: int = 256
    aam_scale: float = 30.0
    aam_margin: float = 0.4
    pool_use_variance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "stage_depths", tuple(self.stage_depths))
        object.__setattr__(self, "stage_channels", tuple(self.stage_channels))
        if len(self.stage_depths) != 4 or len(self.stage_channels) != 4:
            raise ConfigurationError("expected exactly 4 stages")
        if any(d < 1 for d in self.stage_depths):
            raise ConfigurationError("every stage needs at least one block")
        if self.in_dim < 1 or self.embed_dim < 1:
            raise ConfigurationError("dimensions must be positive")


def _halved(size: int) -> int:
    # 3x3 conv, stride 2, padding 1
    return (size + 2 - 3) // 2 + 1


class BasicBlock(Module):
    """Two 3x3 convs with a skip; stride-2 + 1x1 projection at transitions."""

    def __init__(self, in_ch, out_ch, stride, rng, dtype=np.float32):
        super().__init__()
        self.conv1 = Conv2d(in_ch, out_ch, 3, stride=stride, padding=1,
                            bias=False, rng=rng, dtype=dtype)
        self.bn1 = BatchNorm(out_ch, dtype=dtype)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(out_ch, out_ch, 3, padding=1, bias=False, rng=rng, dtype=dtype)
        self.bn2 = BatchNorm(out_ch, dtype=dtype)
        self.relu2 = ReLU()
        if stride != 1 or in_ch != out_ch:
            self.proj = Conv2d(in_ch, out_ch, 1, stride=stride, bias=False,
                               rng=rng, dtype=dtype)
            self.proj_bn = BatchNorm(out_ch, dtype=dtype)
        else:
            self.proj = None

    def forward(self, x):
        h = self.relu1.forward(self.bn1.forward(self.conv1.forward(x)))
        h = self.bn2.forward(self.conv2.forward(h))
        skip = x if self.proj is None else self.proj_bn.forward(self.proj.forward(x))
        return self.relu2.forward(h + skip)

    def backward(self, grad):
        grad = self.relu2.backward(grad)
        gmain = self.conv1.backward(
            self.bn1.backward(
                self.relu1.backward(self.conv2.backward(self.bn2.backward(grad)))
            )
        )
        if self.proj is None:
            return gmain + grad
        return gmain + self.proj.backward(self.proj_bn.backward(grad))


class ResNet34(Model):
    kind = "resnet34"

    def __init__(self, cfg: ResNetConfig, seed: int = 0, dtype=np.float32):
        super().__init__(cfg)
        rng = np.random.default_rng(seed)
        ch0 = cfg.stage_channels[0]
        self.stem = Conv2d(1, ch0, 3, padding=1, bias=False, rng=rng, dtype=dtype)
        self.stem_bn = BatchNorm(ch0, dtype=dtype)
        self.stem_relu = ReLU()

        blocks = []
        in_ch = ch0
        freq = cfg.in_dim
        for stage, (depth, out_ch) in enumerate(zip(cfg.stage_depths, cfg.stage_channels)):
            for i in range(depth):
                stride = 2 if (stage > 0 and i == 0) else 1
                blocks.append(BasicBlock(in_ch, out_ch, stride, rng, dtype))
                in_ch = out_ch
            if stage > 0:
                freq = _halved(freq)
        self.blocks = ModuleList(blocks)

        self.out_freq = freq
        self.pool = StatisticsPooling(use_variance=cfg.pool_use_variance)
        self.fc = Linear(2 * in_ch * freq, cfg.embed_dim, rng=rng, dtype=dtype)
        self.head = AamHead(
            AamConfig(cfg.n_classes, cfg.embed_dim, cfg.aam_scale, cfg.aam_margin),
            rng=rng, dtype=dtype,
        )

    def embed(self, x):
        x = self.check_input(x)
        h = x[:, None, :, :]
        h = self.stem_relu.forward(self.stem_bn.forward(self.stem.forward(h)))
        for block in self.blocks:
            h = block.forward(h)
        b, c, f, t = h.shape
        self._map_shape = h.shape
        pooled = self.pool.forward(h.reshape(b, c * f, t))
        return self.fc.forward(pooled)

    def backward_embed(self, grad):
        g = self.pool.backward(self.fc.backward(grad))
        g = g.reshape(self._map_shape)
        for block in reversed(list(self.blocks)):
            g = block.backward(g)
        g = self.stem.backward(self.stem_bn.backward(self.stem_relu.backward(g)))
        return g[:, 0, :, :]


def build_resnet34(cfg: ResNetConfig, seed: int = 0) -> ResNet34:
    return ResNet34(cfg, seed)
