"""
Camadas básicas com forward/backward explícitos (sem autograd)

Cada camada devolve um cache no forward e o consome no backward; os
gradientes dos parâmetros são acumulados em `Parameter.grad`.
"""

from typing import Iterator, List, Optional, Tuple

import numpy as np

from config.settings import NUMERIC_CONFIG
from ..utils.validators import ShapeError, StateError


class Parameter:
    """
    Tensor nomeado com gradiente acumulado

    Args:
        name: Nome hierárquico (ex.: "enc0.block1.conv.W1")
        value: Valor inicial
        trainable: False para buffers (estatísticas de batch norm)
    """

    def __init__(self, name: str, value: np.ndarray, trainable: bool = True):
        self.name = name
        self.value = value
        self.trainable = trainable
        self.grad = np.zeros_like(value)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def zero_grad(self):
        self.grad[...] = 0

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.shape})"


class Module:
    """Base com registro ordenado de parâmetros e submódulos"""

    def __init__(self, name: str):
        self.name = name
        self._parameters: List[Parameter] = []
        self._modules: List["Module"] = []

    def register_parameter(
        self, suffix: str, value: np.ndarray, trainable: bool = True
    ) -> Parameter:
        parameter = Parameter(f"{self.name}.{suffix}", value, trainable)
        self._parameters.append(parameter)
        return parameter

    def register_module(self, module: "Module") -> "Module":
        self._modules.append(module)
        return module

    def state(self) -> Iterator[Parameter]:
        """Todos os tensores (treináveis e buffers) em ordem de declaração"""
        yield from self._parameters
        for module in self._modules:
            yield from module.state()

    def parameters(self) -> List[Parameter]:
        return [p for p in self.state() if p.trainable]

    def buffers(self) -> List[Parameter]:
        return [p for p in self.state() if not p.trainable]

    def zero_grad(self):
        for parameter in self.parameters():
            parameter.zero_grad()

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())


def he_normal(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    """Inicialização He (escala por fan-in)"""
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


def leaky_relu(x: np.ndarray, slope: float = NUMERIC_CONFIG["leaky_slope"]):
    """Leaky ReLU; devolve (saída, derivada local)"""
    positive = x > 0
    derivative = np.where(positive, 1.0, slope).astype(x.dtype)
    return x * derivative, derivative


class Linear(Module):
    """
    Camada densa y = x·W (+ b)

    Args:
        name: Nome da camada
        c_in: Largura de entrada
        c_out: Largura de saída
        rng: Gerador para a inicialização
        dtype: Tipo dos parâmetros
        bias: Se inclui vetor de bias (inicializado em zero)
    """

    def __init__(self, name, c_in, c_out, rng, dtype=np.float32, bias=False):
        super().__init__(name)
        self.c_in, self.c_out = c_in, c_out
        self.W = self.register_parameter("W", he_normal(rng, (c_in, c_out), c_in, dtype))
        self.b = (
            self.register_parameter("b", np.zeros(c_out, dtype=dtype)) if bias else None
        )

    def forward(self, x: np.ndarray):
        if x.shape[-1] != self.c_in:
            raise ShapeError(f"{self.name}: entrada com largura {x.shape[-1]}, esperado {self.c_in}")
        y = x @ self.W.value
        if self.b is not None:
            y = y + self.b.value
        return y, x

    def backward(self, dy: np.ndarray, cache) -> np.ndarray:
        if cache is None:
            raise StateError(f"{self.name}: backward sem forward")
        x = cache
        self.W.grad += x.T @ dy
        if self.b is not None:
            self.b.grad += dy.sum(axis=0)
        return dy @ self.W.value.T


class BatchNorm(Module):
    """
    Normalização por canal sobre as linhas (pontos)

    Em treino usa estatísticas do batch e atualiza as médias móveis; em
    avaliação usa as médias móveis. Com `enabled=False` é a identidade
    (modo usado pelos oráculos de gradiente); os parâmetros continuam
    registrados.
    """

    def __init__(self, name, channels, dtype=np.float32, enabled=True):
        super().__init__(name)
        self.enabled = enabled
        self.momentum = NUMERIC_CONFIG["bn_momentum"]
        self.eps = NUMERIC_CONFIG["bn_eps"]
        self.gamma = self.register_parameter("gamma", np.ones(channels, dtype=dtype))
        self.beta = self.register_parameter("beta", np.zeros(channels, dtype=dtype))
        self.running_mean = self.register_parameter(
            "running_mean", np.zeros(channels, dtype=dtype), trainable=False
        )
        self.running_var = self.register_parameter(
            "running_var", np.ones(channels, dtype=dtype), trainable=False
        )

    def forward(self, x: np.ndarray, training: bool):
        if not self.enabled:
            return x, ("identity",)

        if training:
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            m = self.momentum
            self.running_mean.value[...] = (1 - m) * self.running_mean.value + m * mean
            self.running_var.value[...] = (1 - m) * self.running_var.value + m * var
        else:
            mean = self.running_mean.value
            var = self.running_var.value

        inv_std = (1.0 / np.sqrt(var + self.eps)).astype(x.dtype)
        x_hat = (x - mean) * inv_std
        return self.gamma.value * x_hat + self.beta.value, ("batch" if training else "eval", x_hat, inv_std)

    def backward(self, dy: np.ndarray, cache) -> np.ndarray:
        if cache is None:
            raise StateError(f"{self.name}: backward sem forward")
        if cache[0] == "identity":
            return dy

        mode, x_hat, inv_std = cache
        self.gamma.grad += np.sum(dy * x_hat, axis=0)
        self.beta.grad += dy.sum(axis=0)
        dx_hat = dy * self.gamma.value

        if mode == "eval":
            return dx_hat * inv_std

        n = dy.shape[0]
        return (inv_std / n) * (
            n * dx_hat - dx_hat.sum(axis=0) - x_hat * np.sum(dx_hat * x_hat, axis=0)
        )


class UnaryBlock(Module):
    """MLP ponto a ponto: Linear (sem bias) → BatchNorm → Leaky ReLU opcional"""

    def __init__(self, name, c_in, c_out, rng, dtype=np.float32, batch_norm=True, activation=True):
        super().__init__(name)
        self.linear = self.register_module(Linear(f"{name}.linear", c_in, c_out, rng, dtype))
        self.norm = self.register_module(BatchNorm(f"{name}.bn", c_out, dtype, batch_norm))
        self.activation = activation
        self._cache: Optional[tuple] = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        y, linear_cache = self.linear.forward(x)
        y, norm_cache = self.norm.forward(y, training)
        derivative = None
        if self.activation:
            y, derivative = leaky_relu(y)
        self._cache = (linear_cache, norm_cache, derivative)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError(f"{self.name}: backward sem forward")
        linear_cache, norm_cache, derivative = self._cache
        if derivative is not None:
            dy = dy * derivative
        dy = self.norm.backward(dy, norm_cache)
        return self.linear.backward(dy, linear_cache)
