"""
Módulo models - Rede SPNet, blocos e checkpoints
"""

from .blocks import Classifier, ResidualBlock
from .spnet import (
    LevelConfig,
    NetworkSpec,
    SPNet,
    build_network,
    encode,
    propagate_features,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Classifier",
    "ResidualBlock",
    "LevelConfig",
    "NetworkSpec",
    "SPNet",
    "build_network",
    "encode",
    "propagate_features",
    "load_checkpoint",
    "save_checkpoint",
]
