"""
SPNet Segmentation
Segmentação semântica de nuvens de pontos com convolução de pontos em cascas (SPConv)
"""

__version__ = "1.0.0"
__author__ = "SPNet Segmentation Team"
__license__ = "MIT"
__description__ = (
    "Segmentação semântica de nuvens de pontos com convolução de pontos em cascas"
)

# Imports principais para facilitar uso
from .core.geometry import PointCloud
from .core.ply_parser import PLYParser
from .models.spnet import NetworkSpec, SPNet, build_network
from .training.trainer import TrainConfig, Trainer
from .utils.file_handler import FileHandler
from .utils.validators import SPNetError

# Lista de exports públicos
__all__ = [
    "PointCloud",
    "PLYParser",
    "NetworkSpec",
    "SPNet",
    "build_network",
    "TrainConfig",
    "Trainer",
    "FileHandler",
    "SPNetError",
]

# Configuração de logging básica
import logging

logging.getLogger(__name__).addHandler(logging.NullHandler())
