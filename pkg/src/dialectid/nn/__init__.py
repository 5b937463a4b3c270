"""Tensor layers with explicit forward and analytic backward passes."""

from .blocks import Res2Block, SEBlock
from .core import Module, ModuleList, Parameter, Sequential, he_uniform
from .heads import AamConfig, AamHead, SoftmaxCrossEntropy, aam_logits, cross_entropy, softmax
from .layers import BatchNorm, Conv1d, Conv2d, Linear, ReLU, Sigmoid, Tanh
from .pooling import AttentiveStatisticsPooling, StatisticsPooling, statistics_pooling

__all__ = [
    "AamConfig",
    "AamHead",
    "AttentiveStatisticsPooling",
    "BatchNorm",
    "Conv1d",
    "Conv2d",
    "Linear",
    "Module",
    "ModuleList",
    "Parameter",
    "ReLU",
    "Res2Block",
    "SEBlock",
    "Sequential",
    "Sigmoid",
    "SoftmaxCrossEntropy",
    "StatisticsPooling",
    "Tanh",
    "aam_logits",
    "cross_entropy",
    "he_uniform",
    "softmax",
    "statistics_pooling",
]
