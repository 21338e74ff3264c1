"""
Módulo data - Cenas sintéticas e leitura de conjuntos
"""

from .scenes import (
    Scene,
    SyntheticSceneSpec,
    augment,
    generate_dataset,
    generate_scene,
    load_dataset,
    synthetic_dataset,
)

__all__ = [
    "Scene",
    "SyntheticSceneSpec",
    "augment",
    "generate_dataset",
    "generate_scene",
    "load_dataset",
    "synthetic_dataset",
]
