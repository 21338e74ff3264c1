"""
Módulo core - Geometria, amostragem e o operador SPConv
"""

from .geometry import NeighborhoodIndex, PointCloud, knn_search, radius_search
from .sampling import grid_sample, poisson_disk_sample
from .kernel_layout import KernelLayout, build_layout, correlation
from .attention import FeatureAttention, attention_gaussian, attention_mlp, apply_attention
from .spconv import ConvNeighborhood, SPConv, SPConvParams, aggregate
from .ply_parser import PLYParser

__all__ = [
    "NeighborhoodIndex",
    "PointCloud",
    "knn_search",
    "radius_search",
    "grid_sample",
    "poisson_disk_sample",
    "KernelLayout",
    "build_layout",
    "correlation",
    "FeatureAttention",
    "attention_gaussian",
    "attention_mlp",
    "apply_attention",
    "ConvNeighborhood",
    "SPConv",
    "SPConvParams",
    "aggregate",
    "PLYParser",
]
