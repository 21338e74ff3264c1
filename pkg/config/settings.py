"""
Configurações do projeto SPNet Segmentation
"""

import logging
import logging.handlers
import os
from pathlib import Path
from typing import Any, Dict, Optional

# Diretórios do projeto
PROJECT_ROOT = Path(__file__).parent.parent
OUTPUT_DIR = PROJECT_ROOT / "output"
CACHE_DIR = Path(os.getenv("SPNET_CACHE_DIR", str(PROJECT_ROOT / ".cache" / "kernels")))

# Configurações padrão da rede, do treino e dos dados
DEFAULT_CONFIG = {
    # Geometria por nível
    "v0": 0.04,
    "encoder_levels": 5,
    "decoder_levels": 4,

    # Arquitetura
    "num_classes": 3,
    "input_channels": 7,
    "base_channels": 64,
    "encoder_blocks": 2,
    "decoder_blocks": 1,
    "bottleneck_ratio": 0.5,
    "batch_norm": True,

    # Kernel
    "kernel_mode": "spconv",
    "num_shells": 3,
    "points_per_shell": 14,
    "kernel_seed": 42,

    # Atenção local
    "attention_variant": "mlp3",
    "attention_input": "color+normal",
    "attention_hidden": 16,

    # Amostragem e propagação
    "sampler": "pds",
    "upsampling": "fp",
    "fp_k": 3,
    "fp_weighting": "inverse_square",

    # Treino
    "batch_size": 8,
    "lr0": 0.001,
    "betas": (0.9, 0.999),
    "adam_eps": 1e-8,
    "lr_decay_factor": 0.3,
    "decay_every": 50,
    "epochs": 30,
    "seed": 0,
    "class_weighting": False,
    "augment_rotation": False,
    "augment_jitter": False,
    "jitter_sigma": 0.005,

    # Dados
    "train_data": "synthetic",
    "test_data": "",
    "scene_count": 20,
    "test_scene_count": 5,
    "points_per_primitive": 1350,
    "scene_noise": 0.002,
}

# Relações entre os raios de cada nível e a influência v_l
LEVEL_RULES = {
    "query_radius": 4.0,
    "shell_radii": (1.5, 3.0),
    "pds_radius": 0.75,
    "baseline_shell_radius": 1.5,
}

# Otimização da disposição dos pontos de kernel
KERNEL_CONFIG = {
    "repulsion_iterations": 10000,
    "repulsion_tolerance": 1e-9,
    "repulsion_step": 0.01,
    "cache_magic": b"SPKL",
    "cache_version": 1,
}

# Constantes numéricas
NUMERIC_CONFIG = {
    "leaky_slope": 0.1,
    "bn_momentum": 0.1,
    "bn_eps": 1e-5,
    "coincidence_threshold": 1e-12,
    "gradcheck_step": 1e-6,
    "gradcheck_tolerance": 1e-5,
    "gradcheck_floor": 1e-3,
    "normal_tolerance": 1e-6,
    "chunk_size": 65536,
}

# Cenas sintéticas
SCENE_CONFIG = {
    "primitives": {"plane": 2, "sphere": 2, "box": 2},
    "bounds": 2.0,
    "color_jitter": 0.05,
    "class_names": ["plane", "sphere", "box"],
}

# Formato de checkpoint
CHECKPOINT_CONFIG = {
    "magic": b"SPNETCKP",
    "version": 1,
    "file_name": "checkpoint.spn",
    "metrics_file": "metrics.tsv",
}

# Configurações de logging
LOGGING_CONFIG = {
    "level": "INFO",
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "log_file": os.getenv("SPNET_LOG_FILE") or None,
    "max_log_size_mb": 10,
    "backup_count": 5,
}

# Configurações de interface CLI
CLI_CONFIG = {
    "show_header": True,
    "verbose_default": False,
}

# Configurações de desenvolvimento
DEV_CONFIG = {
    "debug_mode": os.getenv("SPNET_DEBUG", "False").lower() == "true",
}


def get_config(overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Retorna configuração padrão com sobrescritas aplicadas

    Args:
        overrides: Valores que substituem os padrões

    Returns:
        Dict com configurações
    """
    config = DEFAULT_CONFIG.copy()

    if overrides:
        config.update(overrides)

    return config


def get_cache_dir() -> Optional[Path]:
    """
    Diretório do cache de disposições de kernel

    Returns:
        Caminho do cache ou None quando desabilitado (SPNET_CACHE_DIR vazio)
    """
    value = os.getenv("SPNET_CACHE_DIR")
    if value is not None and not value.strip():
        return None
    return Path(value) if value else CACHE_DIR


def configure_logging(verbose: bool = False) -> None:
    """
    Configura o logging da aplicação a partir de LOGGING_CONFIG

    Args:
        verbose: Se True usa nível DEBUG
    """
    debug = verbose or DEV_CONFIG["debug_mode"]
    level = logging.DEBUG if debug else getattr(logging, LOGGING_CONFIG["level"])

    handlers = [logging.StreamHandler()]

    log_file = LOGGING_CONFIG["log_file"]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            logging.handlers.RotatingFileHandler(
                log_file,
                maxBytes=LOGGING_CONFIG["max_log_size_mb"] * 1024 * 1024,
                backupCount=LOGGING_CONFIG["backup_count"],
            )
        )

    logging.basicConfig(
        level=level, format=LOGGING_CONFIG["format"], handlers=handlers, force=True
    )


def ensure_directories():
    """Cria diretórios necessários do projeto"""
    directories = [OUTPUT_DIR]

    cache_dir = get_cache_dir()
    if cache_dir is not None:
        directories.append(cache_dir)

    for directory in directories:
        directory.mkdir(parents=True, exist_ok=True)


# Executa setup inicial
if __name__ == "__main__":
    ensure_directories()
    print(f"✅ Diretórios do projeto criados")
    print(f"📁 Projeto: {PROJECT_ROOT}")
    print(f"📁 Saída: {OUTPUT_DIR}")
    print(f"📁 Cache de kernels: {get_cache_dir()}")
    print(f"🔧 Debug: {DEV_CONFIG['debug_mode']}")
