"""
Otimizador Adam e agenda de taxa de aprendizado
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ..core.layers import Parameter
from ..utils.validators import ShapeError, require_finite

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """Momentos de primeira e segunda ordem e contador de passos"""

    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params]
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    names: Sequence[str] = (),
) -> Tuple[List[np.ndarray], AdamState]:
    """
    Um passo de Adam com correção de viés

    Args:
        params: Valores atuais
        grads: Gradientes (mesmos formatos)
        state: Momentos (zerados no primeiro passo)
        lr: Taxa de aprendizado
        beta1, beta2: Decaimentos dos momentos
        eps: Termo de estabilidade
        names: Nomes dos tensores para as mensagens de erro

    Returns:
        Tupla (novos valores, novo estado)
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads e estado com tamanhos diferentes")

    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ShapeError(f"Gradiente {g.shape} incompatível com parâmetro {p.shape}")
        require_finite(g, names[i] if i < len(names) else f"param[{i}]")

    step = state.step + 1
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append((p - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype))
        new_m.append(m)
        new_v.append(v)

    return new_params, AdamState(new_m, new_v, step)


class Adam:
    """
    Adam sobre uma lista de Parameter (atualização in-place)

    Args:
        parameters: Tensores treináveis
        betas: (β1, β2)
        eps: Termo de estabilidade
    """

    def __init__(self, parameters: List[Parameter], betas=(0.9, 0.999), eps: float = 1e-8):
        self.parameters = parameters
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.state = AdamState.zeros_like([p.value for p in parameters])

    def step(self, lr: float, scale: float = 1.0):
        """Aplica um passo usando `scale · grad` de cada parâmetro"""
        grads = [p.grad * scale if scale != 1.0 else p.grad for p in self.parameters]
        values, self.state = adam_step(
            [p.value for p in self.parameters],
            grads,
            self.state,
            lr,
            self.beta1,
            self.beta2,
            self.eps,
            names=[p.name for p in self.parameters],
        )
        for parameter, value in zip(self.parameters, values):
            parameter.value[...] = value

    def zero_grad(self):
        for parameter in self.parameters:
            parameter.zero_grad()


def lr_schedule(epoch: int, lr0: float, decay_factor: float = 0.3, decay_every: int = 50) -> float:
    """
    Decaimento em degraus: lr0 · fator^floor(epoch / decay_every)

    Args:
        epoch: Época (>= 0)
        lr0: Taxa inicial
        decay_factor: Fator multiplicativo por degrau
        decay_every: Épocas por degrau

    Returns:
        Taxa de aprendizado da época
    """
    return lr0 * decay_factor ** (epoch // decay_every)
