from .base import MODEL_KINDS, Model, forward_embed, forward_logits
from .ecapa import Ecapa, EcapaConfig, build_ecapa
from .resnet import BasicBlock, ResNet34, ResNetConfig, build_resnet34

__all__ = [
    "MODEL_KINDS",
    "Model",
    "forward_embed",
    "forward_logits",
    "Ecapa",
    "EcapaConfig",
    "build_ecapa",
    "BasicBlock",
    "ResNet34",
    "ResNetConfig",
    "build_resnet34",
]
