"""
Módulo de validações e exceções do projeto
"""

import math
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np


class SPNetError(Exception):
    """Erro base do projeto"""


class InputError(SPNetError):
    """Entrada rejeitada (coordenadas não finitas, atributos ausentes, rótulos)"""

    def __init__(self, message: str, missing: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.missing = list(missing or [])


class ParameterError(SPNetError):
    """Parâmetro ou valor de configuração inválido"""


class ShapeError(SPNetError):
    """Formato de tensor incompatível"""


class StateError(SPNetError):
    """Operação chamada em estado inválido (ex.: backward sem forward)"""


class DegenerateInputError(SPNetError):
    """Um nível do encoder ficou vazio"""

    def __init__(self, message: str, level: int):
        super().__init__(message)
        self.level = level


class UndefinedMetricError(SPNetError):
    """Métrica indefinida (matriz vazia ou todas as classes ausentes)"""


class NonFiniteError(SPNetError):
    """Gradiente ou perda não finitos"""

    def __init__(
        self,
        message: str,
        tensor: Optional[str] = None,
        batch_ids: Optional[Sequence[int]] = None,
    ):
        super().__init__(message)
        self.tensor = tensor
        self.batch_ids = list(batch_ids or [])


def require_positive(value: float, name: str) -> float:
    """
    Garante que um parâmetro escalar é finito e positivo

    Args:
        value: Valor a validar
        name: Nome usado na mensagem de erro

    Returns:
        O próprio valor
    """
    if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(
        float(value)
    ):
        raise ParameterError(f"{name} deve ser um número finito, recebido {value!r}")
    if value <= 0:
        raise ParameterError(f"{name} deve ser > 0, recebido {value!r}")
    return value


def require_points(points: Any, name: str = "points") -> np.ndarray:
    """
    Converte e valida um conjunto de pontos 3D

    Args:
        points: Array-like (N, 3)
        name: Nome usado nas mensagens

    Returns:
        Array float64 (N, 3)
    """
    array = np.asarray(points, dtype=np.float64)
    if array.ndim != 2 or array.shape[1] != 3:
        raise ShapeError(f"{name} deve ter formato (N, 3), recebido {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InputError(f"Coordenadas não finitas em {name}")
    return array


def require_width(array: np.ndarray, width: int, name: str) -> None:
    """Verifica a largura (última dimensão) de um tensor"""
    if array.shape[-1] != width:
        raise ShapeError(
            f"{name}: largura {array.shape[-1]} incompatível, esperado {width}"
        )


def require_finite(array: np.ndarray, name: str) -> None:
    """Levanta NonFiniteError se o tensor tiver NaN ou infinito"""
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"Valores não finitos em {name}", tensor=name)


def require_choice(value: str, choices: Iterable[str], name: str) -> str:
    """Verifica se o valor pertence ao conjunto permitido"""
    allowed = list(choices)
    if value not in allowed:
        raise ParameterError(f"{name} deve ser um de {allowed}, recebido {value!r}")
    return value


class ConfigValidator:
    """
    Classe para validação de configurações de treino
    """

    def __init__(self):
        """Inicializa validador"""
        self.stats = {
            "validations_performed": 0,
            "valid_configs": 0,
            "invalid_configs": 0,
            "validation_errors": [],
        }

    def validate_train_config(self, config: Dict[str, Any]) -> bool:
        """
        Valida os invariantes de uma configuração de treino

        Args:
            config: Dicionário com os campos do TrainConfig

        Returns:
            True se a configuração é válida
        """
        self.stats["validations_performed"] += 1
        errors = []

        if not config.get("lr0", 0) > 0:
            errors.append(f"lr0 deve ser > 0: {config.get('lr0')}")

        factor = config.get("lr_decay_factor", 0)
        if not 0 < factor < 1:
            errors.append(f"lr_decay_factor deve estar em (0, 1): {factor}")

        betas = config.get("betas", (0.9, 0.999))
        if len(betas) != 2 or not all(0 <= beta < 1 for beta in betas):
            errors.append(f"betas devem estar em [0, 1): {betas}")

        for key in ("batch_size", "decay_every", "epochs", "num_classes", "fp_k"):
            if key in config and int(config[key]) < 1:
                errors.append(f"{key} deve ser >= 1: {config[key]}")

        if config.get("v0", 1.0) <= 0:
            errors.append(f"v0 deve ser > 0: {config.get('v0')}")

        choices = {
            "attention_variant": ["none", "gaussian", "mlp2", "mlp3"],
            "attention_input": ["color", "normal", "color+normal"],
            "sampler": ["pds", "grid"],
            "upsampling": ["fp", "nearest"],
            "fp_weighting": ["inverse_square", "inverse"],
            "kernel_mode": ["spconv", "kpconv"],
        }
        for key, allowed in choices.items():
            if key in config and config[key] not in allowed:
                errors.append(f"{key} deve ser um de {allowed}: {config[key]!r}")

        channels = config.get("base_channels", 64)
        mid = int(channels * config.get("bottleneck_ratio", 0.5))
        if mid < 2 or mid % 2:
            errors.append(
                f"base_channels * bottleneck_ratio deve ser par e >= 2: {mid}"
            )

        if errors:
            self.stats["invalid_configs"] += 1
            self.stats["validation_errors"].extend(errors)
            return False

        self.stats["valid_configs"] += 1
        return True

    def get_stats(self) -> Dict:
        """
        Retorna estatísticas de validação

        Returns:
            Dict com estatísticas
        """
        return self.stats.copy()

    def reset_stats(self):
        """Reset das estatísticas"""
        self.stats = {
            "validations_performed": 0,
            "valid_configs": 0,
            "invalid_configs": 0,
            "validation_errors": [],
        }

    def get_last_errors(self, count: int = 5) -> List[str]:
        """
        Retorna últimos erros de validação

        Args:
            count: Número de erros para retornar

        Returns:
            Lista com últimos erros
        """
        return (
            self.stats["validation_errors"][-count:]
            if self.stats["validation_errors"]
            else []
        )
