"""
Blocos da rede: bloco residual SPConv e cabeça de classificação
"""

from typing import Optional

import numpy as np

from ..core.attention import FeatureAttention
from ..core.kernel_layout import KernelLayout
from ..core.layers import Linear, Module, UnaryBlock, leaky_relu
from ..core.spconv import ConvNeighborhood, SPConv
from ..utils.validators import ParameterError, StateError


class ResidualBlock(Module):
    """
    MLP de redução → SPConv → MLP de expansão, com atalho identidade/projeção

    Args:
        name: Nome do bloco
        c_in: Largura de entrada
        c_out: Largura de saída
        layout: Disposição de kernel usada pelo SPConv
        rng: Gerador para a inicialização
        dtype: Tipo dos parâmetros
        batch_norm: False para BN em modo identidade
        ratio: C_mid = C_out · ratio (deve ser par)
        attention: Módulo de atenção do SPConv
    """

    def __init__(
        self,
        name,
        c_in,
        c_out,
        layout: KernelLayout,
        rng,
        dtype=np.float32,
        batch_norm=True,
        ratio=0.5,
        attention: Optional[FeatureAttention] = None,
    ):
        super().__init__(name)
        c_mid = int(round(c_out * ratio))
        if c_mid < 2 or c_mid % 2:
            raise ParameterError(f"{name}: largura intermediária deve ser par e >= 2: {c_mid}")

        self.c_in, self.c_mid, self.c_out = c_in, c_mid, c_out
        self.down = self.register_module(
            UnaryBlock(f"{name}.down", c_in, c_mid, rng, dtype, batch_norm)
        )
        self.conv = self.register_module(
            SPConv(f"{name}.conv", layout, c_mid, c_mid, rng, dtype, batch_norm, attention)
        )
        self.up = self.register_module(
            UnaryBlock(f"{name}.up", c_mid, c_out, rng, dtype, batch_norm, activation=False)
        )
        self.shortcut = None
        if c_in != c_out:
            self.shortcut = self.register_module(
                UnaryBlock(f"{name}.shortcut", c_in, c_out, rng, dtype, batch_norm, activation=False)
            )
        self._cache = None

    def forward(
        self,
        x: np.ndarray,
        neighborhood: ConvNeighborhood,
        shortcut_index: Optional[np.ndarray] = None,
        low_query: Optional[np.ndarray] = None,
        low_support: Optional[np.ndarray] = None,
        training: bool = False,
    ) -> np.ndarray:
        """
        Args:
            x: Features dos suportes (S, C_in)
            neighborhood: Estrutura de agregação (consultas ← suportes)
            shortcut_index: Suporte associado a cada consulta no bloco com
                passo; None quando consultas e suportes coincidem
            low_query: Features de baixo nível das consultas
            low_support: Features de baixo nível dos suportes
            training: Modo de treino das batch norms

        Returns:
            Features das consultas (Q, C_out)
        """
        h = self.down.forward(x, training)
        h = self.conv.forward(h, neighborhood, low_query, low_support, training)
        h = self.up.forward(h, training)

        skip = x if shortcut_index is None else x[shortcut_index]
        if self.shortcut is not None:
            skip = self.shortcut.forward(skip, training)

        out, derivative = leaky_relu(h + skip)
        self._cache = (x.shape, shortcut_index, derivative)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError(f"{self.name}: backward sem forward")
        x_shape, shortcut_index, derivative = self._cache

        d_sum = dout * derivative
        dx = self.down.backward(self.conv.backward(self.up.backward(d_sum)))

        d_skip = d_sum if self.shortcut is None else self.shortcut.backward(d_sum)
        if shortcut_index is None:
            dx = dx + d_skip
        else:
            np.add.at(dx, shortcut_index, d_skip)
        return dx


class Classifier(Module):
    """Cabeça por ponto: MLP + camada linear com bias até as classes"""

    def __init__(self, name, channels, num_classes, rng, dtype=np.float32, batch_norm=True):
        super().__init__(name)
        self.hidden = self.register_module(
            UnaryBlock(f"{name}.mlp", channels, channels, rng, dtype, batch_norm)
        )
        self.output = self.register_module(
            Linear(f"{name}.out", channels, num_classes, rng, dtype, bias=True)
        )
        self._cache = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        logits, self._cache = self.output.forward(self.hidden.forward(x, training))
        return logits

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        return self.hidden.backward(self.output.backward(dlogits, self._cache))
