"""
Atenção de features locais (pesos por vizinho a partir de cor/normal)
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from .layers import Module, he_normal
from ..utils.validators import ParameterError, ShapeError, StateError, require_choice

logger = logging.getLogger(__name__)

ATTENTION_VARIANTS = ("none", "gaussian", "mlp2", "mlp3")
ATTENTION_INPUTS = ("color", "normal", "color+normal")

Layer = Tuple[np.ndarray, np.ndarray]


@dataclass
class AttentionParams:
    """
    Parâmetros de uma função de atenção

    Attributes:
        variant: "gaussian" ou "mlp"
        sigma: Largura de banda (apenas gaussiana)
        mlp_layers: Pares (W, b) das camadas (apenas mlp)
    """

    variant: str
    sigma: Optional[float] = None
    mlp_layers: List[Layer] = field(default_factory=list)

    def __post_init__(self):
        require_choice(self.variant, ("gaussian", "mlp"), "variant")
        if self.variant == "gaussian":
            if self.sigma is None or not self.sigma > 0:
                raise ParameterError(f"sigma deve ser > 0: {self.sigma}")
        else:
            if not self.mlp_layers:
                raise ParameterError("MLP de atenção sem camadas")
            if self.mlp_layers[-1][0].shape[-1] != 1:
                raise ShapeError("Última camada da MLP de atenção deve ter largura 1")


def low_level_features(cloud, attention_input: str) -> np.ndarray:
    """
    Features de baixo nível usadas pela atenção

    Args:
        cloud: PointCloud com cores e/ou normais
        attention_input: "color", "normal" ou "color+normal"

    Returns:
        Array (N, 3) ou (N, 6)
    """
    require_choice(attention_input, ATTENTION_INPUTS, "attention_input")
    parts = []
    if "color" in attention_input:
        parts.append(cloud.colors)
    if "normal" in attention_input:
        parts.append(cloud.normals)
    return np.concatenate(parts, axis=1)


def attention_gaussian(query, neighbor, sigma: float) -> np.ndarray:
    """
    ω = exp(−‖f(p) − f(s)‖ / (2σ²)), com a norma não elevada ao quadrado

    Args:
        query: Features da consulta (D,) ou (P, D)
        neighbor: Features do vizinho (D,) ou (P, D)
        sigma: Largura de banda (> 0)

    Returns:
        ω em (0, 1], um valor por par
    """
    if not sigma > 0:
        raise ParameterError(f"sigma deve ser > 0: {sigma}")
    delta = np.asarray(query, dtype=np.float64) - np.asarray(neighbor, dtype=np.float64)
    distance = np.sqrt(np.sum(delta * delta, axis=-1))
    return np.exp(-distance / (2.0 * sigma * sigma))


def mlp_forward(delta: np.ndarray, layers: List[Layer]):
    """
    MLP com ReLU nas camadas ocultas e sigmoide na saída

    Returns:
        Tupla (ω (P,), cache)
    """
    activations = [delta]
    pre_activations = []
    a = delta
    for i, (W, b) in enumerate(layers):
        if a.shape[-1] != W.shape[0]:
            raise ShapeError(
                f"Camada {i} da atenção: entrada {a.shape[-1]}, esperado {W.shape[0]}"
            )
        z = a @ W + b
        pre_activations.append(z)
        a = np.maximum(z, 0) if i < len(layers) - 1 else expit(z)
        activations.append(a)
    omega = a[..., 0]
    return omega, (activations, pre_activations)


def mlp_backward(d_omega: np.ndarray, cache, layers: List[Layer]):
    """
    Backward da MLP de atenção

    Returns:
        Tupla (lista de gradientes (dW, db) por camada, gradiente da entrada)
    """
    if cache is None:
        raise StateError("Backward da atenção sem forward")
    activations, pre_activations = cache
    omega = activations[-1]
    dz = d_omega[..., None] * omega * (1.0 - omega)

    grads: List[Layer] = []
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        a_in = activations[i].reshape(-1, W.shape[0])
        dz_flat = dz.reshape(-1, W.shape[1])
        grads.append((a_in.T @ dz_flat, dz_flat.sum(axis=0)))
        da = dz @ W.T
        if i > 0:
            dz = da * (pre_activations[i - 1] > 0)
    grads.reverse()
    return grads, da


def attention_mlp(query, neighbor, params: AttentionParams) -> np.ndarray:
    """
    ω = sigmoid(g(f(p) − f(s))), g uma MLP com ReLU nas camadas ocultas

    Args:
        query: Features da consulta (D,) ou (P, D)
        neighbor: Features do vizinho (D,) ou (P, D)
        params: AttentionParams com variant "mlp"

    Returns:
        ω em (0, 1)
    """
    if params.variant != "mlp":
        raise ParameterError("attention_mlp exige parâmetros de MLP")
    delta = np.asarray(query) - np.asarray(neighbor)
    omega, _ = mlp_forward(delta, params.mlp_layers)
    return omega


def apply_attention(features: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """
    Reponderação com conexão residual: f'(s) = ω·f(s) + f(s)

    Args:
        features: Features dos vizinhos (P, C)
        omega: Um peso por vizinho (P,)

    Returns:
        Features reponderadas (P, C)
    """
    omega = np.asarray(omega)
    if omega.shape != (len(features),):
        raise ShapeError(
            f"Esperado um peso por vizinho ({len(features)}), recebido {omega.shape}"
        )
    return omega[:, None] * features + features


class FeatureAttention(Module):
    """
    Módulo de atenção de um bloco SPConv

    Produz ω por par (consulta, vizinho) a partir da diferença das features
    de baixo nível. As features de baixo nível são constantes (não
    diferenciadas); na variante MLP os pesos recebem gradiente.

    Args:
        name: Nome do módulo
        variant: "none", "gaussian", "mlp2" ou "mlp3"
        input_width: Largura das features de baixo nível
        sigma: Largura de banda da gaussiana (v do nível)
        rng: Gerador para a inicialização
        hidden: Largura das camadas ocultas
        dtype: Tipo dos parâmetros
    """

    def __init__(self, name, variant, input_width, sigma, rng, hidden=16, dtype=np.float32):
        super().__init__(name)
        self.variant = require_choice(variant, ATTENTION_VARIANTS, "attention_variant")
        self.sigma = float(sigma)
        self.weights = []

        if variant.startswith("mlp"):
            depth = int(variant[3:])
            widths = [input_width] + [hidden] * (depth - 1) + [1]
            for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
                W = self.register_parameter(f"mlp{i}.W", he_normal(rng, (a, b), a, dtype))
                bias = self.register_parameter(f"mlp{i}.b", np.zeros(b, dtype=dtype))
                self.weights.append((W, bias))

        self._cache = None

    @property
    def enabled(self) -> bool:
        return self.variant != "none"

    @property
    def params(self) -> AttentionParams:
        if self.variant == "gaussian":
            return AttentionParams("gaussian", sigma=self.sigma)
        return AttentionParams(
            "mlp", mlp_layers=[(W.value, b.value) for W, b in self.weights]
        )

    def forward(self, delta: np.ndarray) -> Optional[np.ndarray]:
        """
        Args:
            delta: f(p) − f(s) por par (P, D)

        Returns:
            ω (P,) ou None quando a atenção está desligada
        """
        if self.variant == "none":
            self._cache = None
            return None
        if self.variant == "gaussian":
            self._cache = None
            distance = np.sqrt(np.sum(delta * delta, axis=1))
            return np.exp(-distance / (2.0 * self.sigma * self.sigma))

        layers = self.params.mlp_layers
        omega, self._cache = mlp_forward(delta.astype(layers[0][0].dtype), layers)
        return omega

    def backward(self, d_omega: np.ndarray):
        """Acumula os gradientes da MLP (a gaussiana não tem parâmetros)"""
        if not self.variant.startswith("mlp"):
            return
        if self._cache is None:
            raise StateError(f"{self.name}: backward sem forward")
        grads, _ = mlp_backward(d_omega, self._cache, self.params.mlp_layers)
        for (W, b), (dW, db) in zip(self.weights, grads):
            W.grad += dW
            b.grad += db
