"""
Módulo config - Configurações do projeto
"""

from .settings import (
    DEFAULT_CONFIG,
    LEVEL_RULES,
    KERNEL_CONFIG,
    NUMERIC_CONFIG,
    SCENE_CONFIG,
    CHECKPOINT_CONFIG,
    CLI_CONFIG,
    get_config,
    get_cache_dir,
    configure_logging,
    ensure_directories,
)

__all__ = [
    "DEFAULT_CONFIG",
    "LEVEL_RULES",
    "KERNEL_CONFIG",
    "NUMERIC_CONFIG",
    "SCENE_CONFIG",
    "CHECKPOINT_CONFIG",
    "CLI_CONFIG",
    "get_config",
    "get_cache_dir",
    "configure_logging",
    "ensure_directories",
]
