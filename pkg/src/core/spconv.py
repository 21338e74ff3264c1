"""
Operador SPConv: agregação por ponto de kernel, convolução por casca e
fusão das cascas, com backward analítico
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy import sparse

from config.settings import NUMERIC_CONFIG
from .attention import FeatureAttention
from .geometry import NeighborhoodIndex
from .kernel_layout import KernelLayout, correlation_matrix
from .layers import BatchNorm, Module, Parameter, he_normal, leaky_relu
from ..utils.validators import ParameterError, ShapeError, StateError

logger = logging.getLogger(__name__)


@dataclass
class SPConvParams:
    """
    Pesos do SPConv

    Attributes:
        W1: Pesos por ponto de kernel (K_total, C_in, C_out/2)
        W2: Pesos de fusão por casca (N_shells, C_out/2, C_out)
    """

    W1: Parameter
    W2: Parameter

    def __post_init__(self):
        K, _, H = self.W1.shape
        N, H2, C_out = self.W2.shape
        if H2 != H or C_out != 2 * H:
            raise ShapeError(
                f"W1 {self.W1.shape} e W2 {self.W2.shape} incompatíveis (C_out = 2·H)"
            )

    @property
    def c_in(self) -> int:
        return self.W1.shape[1]

    @property
    def c_out(self) -> int:
        return self.W2.shape[2]

    def check_layout(self, layout: KernelLayout):
        if self.W1.shape[0] != layout.total_kernel_count:
            raise ShapeError(
                f"W1 tem {self.W1.shape[0]} pontos de kernel, disposição tem "
                f"{layout.total_kernel_count}"
            )
        if self.W2.shape[0] != layout.num_shells:
            raise ShapeError(
                f"W2 tem {self.W2.shape[0]} cascas, disposição tem {layout.num_shells}"
            )

    @classmethod
    def create(cls, name, layout: KernelLayout, c_in, c_out, rng, dtype=np.float32):
        """Inicialização He semeada (fan-in de cada estágio)"""
        if c_out % 2:
            raise ParameterError(f"C_out deve ser par: {c_out}")
        hidden = c_out // 2
        K, N = layout.total_kernel_count, layout.num_shells
        W1 = he_normal(rng, (K, c_in, hidden), c_in * int(max(layout.shell_sizes)), dtype)
        W2 = he_normal(rng, (N, hidden, c_out), N * hidden, dtype)
        return cls(Parameter(f"{name}.W1", W1), Parameter(f"{name}.W2", W2))


def aggregate(layout: KernelLayout, neighbor_offsets, features) -> np.ndarray:
    """
    Soma dos features dos vizinhos ponderada pela correlação com cada ponto de kernel

    Args:
        layout: Disposição de kernel
        neighbor_offsets: Deslocamentos dos vizinhos em relação à consulta (M, 3)
        features: Features dos vizinhos (M, C_in)

    Returns:
        Matriz (K_total, C_in); linhas sem vizinhos na influência são zero
    """
    offsets = np.asarray(neighbor_offsets, dtype=np.float64).reshape(-1, 3)
    features = np.asarray(features)
    if features.ndim != 2 or len(features) != len(offsets):
        raise ShapeError(
            f"features {features.shape} incompatível com {len(offsets)} deslocamentos"
        )
    corr = correlation_matrix(layout, offsets).astype(features.dtype)
    return corr.T @ features


def shell_conv_forward(
    agg: np.ndarray,
    params: SPConvParams,
    layout: KernelLayout,
    bn1: Optional[BatchNorm] = None,
    bn2: Optional[BatchNorm] = None,
    training: bool = False,
    activation: bool = True,
):
    """
    Convolução por casca seguida da fusão das cascas

    Estágio 1: h_n = σ(BN(Σ_{k∈n} agg[k]·W1[k])) para cada casca n.
    Estágio 2: out = σ(BN(Σ_n h_n·W2[n])). A mesma BN do estágio 1 é
    compartilhada entre as cascas.

    Args:
        agg: (K_total, C_in) ou (Q, K_total, C_in)
        params: Pesos W1/W2
        layout: Disposição de kernel
        bn1: Batch norm do estágio 1 (None = identidade)
        bn2: Batch norm do estágio 2 (None = identidade)
        training: Usa estatísticas do batch
        activation: Aplica leaky ReLU nos dois estágios

    Returns:
        Tupla (saída (C_out,) ou (Q, C_out), cache)
    """
    params.check_layout(layout)
    single = agg.ndim == 2
    x = agg[None] if single else agg
    Q, K, C_in = x.shape
    if K != layout.total_kernel_count or C_in != params.c_in:
        raise ShapeError(
            f"agg {agg.shape} incompatível com W1 {params.W1.shape}"
        )

    W1, W2 = params.W1.value, params.W2.value
    H, C_out = W2.shape[1], W2.shape[2]
    N = layout.num_shells

    z1 = np.empty((Q, N, H), dtype=np.result_type(x.dtype, W1.dtype))
    for n, shell in enumerate(layout.shell_slices):
        m = shell.stop - shell.start
        z1[:, n] = x[:, shell].reshape(Q, m * C_in) @ W1[shell].reshape(m * C_in, H)

    y1, bn1_cache = (z1.reshape(Q * N, H), None) if bn1 is None else bn1.forward(
        z1.reshape(Q * N, H), training
    )
    d1 = None
    if activation:
        y1, d1 = leaky_relu(y1)
    h = y1.reshape(Q, N * H)

    z2 = h @ W2.reshape(N * H, C_out)
    y2, bn2_cache = (z2, None) if bn2 is None else bn2.forward(z2, training)
    d2 = None
    if activation:
        y2, d2 = leaky_relu(y2)

    cache = {
        "x": x,
        "h": h,
        "d1": d1,
        "d2": d2,
        "bn1": bn1,
        "bn2": bn2,
        "bn1_cache": bn1_cache,
        "bn2_cache": bn2_cache,
        "params": params,
        "layout": layout,
        "single": single,
    }
    return (y2[0] if single else y2), cache


def shell_conv_backward(dout: np.ndarray, cache) -> Dict[str, np.ndarray]:
    """
    Backward exato de shell_conv_forward

    Os gradientes das batch norms são acumulados nos próprios módulos.

    Args:
        dout: Gradiente da saída, mesmo formato do forward
        cache: Cache devolvido pelo forward

    Returns:
        Dict com gradientes "W1", "W2" e "agg"
    """
    if cache is None:
        raise StateError("shell_conv_backward chamado sem cache do forward")

    x, h = cache["x"], cache["h"]
    params, layout = cache["params"], cache["layout"]
    W1, W2 = params.W1.value, params.W2.value
    Q, K, C_in = x.shape
    N, H, C_out = W2.shape

    dy2 = dout[None] if cache["single"] else dout
    if cache["d2"] is not None:
        dy2 = dy2 * cache["d2"]
    dz2 = dy2 if cache["bn2"] is None else cache["bn2"].backward(dy2, cache["bn2_cache"])

    dW2 = (h.T @ dz2).reshape(N, H, C_out)
    dy1 = (dz2 @ W2.reshape(N * H, C_out).T).reshape(Q * N, H)
    if cache["d1"] is not None:
        dy1 = dy1 * cache["d1"]
    dz1 = dy1 if cache["bn1"] is None else cache["bn1"].backward(dy1, cache["bn1_cache"])
    dz1 = dz1.reshape(Q, N, H)

    dW1 = np.zeros_like(W1, dtype=dz1.dtype)
    dx = np.zeros_like(x, dtype=dz1.dtype)
    for n, shell in enumerate(layout.shell_slices):
        m = shell.stop - shell.start
        x_shell = x[:, shell].reshape(Q, m * C_in)
        dW1[shell] = (x_shell.T @ dz1[:, n]).reshape(m, C_in, H)
        dx[:, shell] = (dz1[:, n] @ W1[shell].reshape(m * C_in, H).T).reshape(Q, m, C_in)

    return {"W1": dW1, "W2": dW2, "agg": dx[0] if cache["single"] else dx}


class ConvNeighborhood:
    """
    Estrutura esparsa da agregação para um par (consultas, suportes)

    Mantém apenas os pares (consulta, vizinho) com alguma correlação não
    nula. Cada entrada (consulta q, ponto de kernel k, suporte s) vira um
    elemento da matriz A (Q·K, S); dentro de cada linha os suportes ficam
    em ordem crescente de índice.

    Args:
        queries: Pontos de consulta (Q, 3)
        supports: Pontos de suporte (S, 3)
        neighborhood: Resultado de radius_search(queries, supports, R)
        layout: Disposição de kernel
    """

    def __init__(self, queries, supports, neighborhood: NeighborhoodIndex, layout: KernelLayout):
        self.layout = layout
        self.query_count = len(queries)
        self.support_count = len(supports)
        K = layout.total_kernel_count

        query_ids, support_ids = neighborhood.pairs()
        chunk = NUMERIC_CONFIG["chunk_size"]

        pair_parts, kernel_parts, corr_parts = [], [], []
        active = np.zeros(len(query_ids), dtype=bool)
        for start in range(0, len(query_ids), chunk):
            stop = start + chunk
            offsets = supports[support_ids[start:stop]] - queries[query_ids[start:stop]]
            corr = correlation_matrix(layout, offsets)
            pairs, kernels = np.nonzero(corr > 0)
            pair_parts.append(pairs + start)
            kernel_parts.append(kernels)
            corr_parts.append(corr[pairs, kernels])
            active[start:stop] = corr.max(axis=1, initial=0.0) > 0

        entry_pair = np.concatenate(pair_parts) if pair_parts else np.zeros(0, dtype=np.int64)
        entry_kernel = np.concatenate(kernel_parts) if kernel_parts else np.zeros(0, dtype=np.int64)
        entry_corr = np.concatenate(corr_parts) if corr_parts else np.zeros(0)

        # Renumera os pares ativos
        remap = np.cumsum(active) - 1
        self.pair_query = query_ids[active]
        self.pair_support = support_ids[active]
        entry_pair = remap[entry_pair]

        rows = self.pair_query[entry_pair] * K + entry_kernel
        order = np.argsort(rows, kind="stable")
        self.entry_pair = entry_pair[order]
        self.entry_corr = entry_corr[order]
        self.entry_row = rows[order]
        self.entry_col = self.pair_support[self.entry_pair]

        self.indptr = np.zeros(self.query_count * K + 1, dtype=np.int64)
        np.cumsum(
            np.bincount(self.entry_row, minlength=self.query_count * K),
            out=self.indptr[1:],
        )

        logger.debug(
            f"ConvNeighborhood: {len(query_ids)} pares, {self.pair_count} ativos, "
            f"{len(self.entry_corr)} entradas"
        )

    @property
    def pair_count(self) -> int:
        return len(self.pair_query)

    def matrix(self, omega: Optional[np.ndarray] = None, dtype=np.float64) -> sparse.csr_matrix:
        """Matriz de agregação (Q·K, S) com os pesos de atenção (1 + ω) aplicados"""
        data = self.entry_corr
        if omega is not None:
            data = data * (1.0 + omega[self.entry_pair])
        return sparse.csr_matrix(
            (data.astype(dtype), self.entry_col, self.indptr),
            shape=(self.query_count * self.layout.total_kernel_count, self.support_count),
        )

    def omega_gradient(self, d_agg_flat: np.ndarray, features: np.ndarray) -> np.ndarray:
        """Gradiente em relação a ω de cada par ativo"""
        weighted = np.zeros(len(self.entry_corr), dtype=np.float64)
        chunk = NUMERIC_CONFIG["chunk_size"]
        for start in range(0, len(weighted), chunk):
            stop = start + chunk
            rowdot = np.einsum(
                "ec,ec->e",
                d_agg_flat[self.entry_row[start:stop]],
                features[self.entry_col[start:stop]],
            )
            weighted[start:stop] = self.entry_corr[start:stop] * rowdot
        return np.bincount(self.entry_pair, weights=weighted, minlength=self.pair_count)


class SPConv(Module):
    """
    Camada SPConv completa: atenção → agregação → convolução por casca → fusão

    Args:
        name: Nome da camada
        layout: Disposição de kernel do nível
        c_in: Largura de entrada
        c_out: Largura de saída (par)
        rng: Gerador para a inicialização
        dtype: Tipo dos parâmetros
        batch_norm: False para BN em modo identidade
        attention: Módulo de atenção (None = sem atenção)
    """

    def __init__(
        self,
        name,
        layout: KernelLayout,
        c_in,
        c_out,
        rng,
        dtype=np.float32,
        batch_norm=True,
        attention: Optional[FeatureAttention] = None,
    ):
        super().__init__(name)
        self.layout = layout
        self.params = SPConvParams.create(name, layout, c_in, c_out, rng, dtype)
        self._parameters.extend([self.params.W1, self.params.W2])
        self.bn1 = self.register_module(BatchNorm(f"{name}.bn1", c_out // 2, dtype, batch_norm))
        self.bn2 = self.register_module(BatchNorm(f"{name}.bn2", c_out, dtype, batch_norm))
        self.attention = None
        if attention is not None and attention.enabled:
            self.attention = self.register_module(attention)
        self._cache = None

    def forward(
        self,
        features: np.ndarray,
        neighborhood: ConvNeighborhood,
        low_query: Optional[np.ndarray] = None,
        low_support: Optional[np.ndarray] = None,
        training: bool = False,
    ) -> np.ndarray:
        """
        Args:
            features: Features dos suportes (S, C_in)
            neighborhood: Estrutura de agregação
            low_query: Features de baixo nível das consultas (atenção)
            low_support: Features de baixo nível dos suportes (atenção)
            training: Modo de treino das batch norms

        Returns:
            Features das consultas (Q, C_out)
        """
        if features.shape != (neighborhood.support_count, self.params.c_in):
            raise ShapeError(
                f"{self.name}: features {features.shape}, esperado "
                f"({neighborhood.support_count}, {self.params.c_in})"
            )

        omega = None
        if self.attention is not None:
            delta = low_query[neighborhood.pair_query] - low_support[neighborhood.pair_support]
            omega = self.attention.forward(delta)

        A = neighborhood.matrix(omega, dtype=features.dtype)
        K = self.layout.total_kernel_count
        agg = (A @ features).reshape(neighborhood.query_count, K, -1)

        out, conv_cache = shell_conv_forward(
            agg, self.params, self.layout, self.bn1, self.bn2, training
        )
        self._cache = (features, neighborhood, A, conv_cache)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        """Acumula gradientes e devolve o gradiente das features dos suportes"""
        if self._cache is None:
            raise StateError(f"{self.name}: backward sem forward")
        features, neighborhood, A, conv_cache = self._cache

        grads = shell_conv_backward(dout, conv_cache)
        self.params.W1.grad += grads["W1"]
        self.params.W2.grad += grads["W2"]

        d_agg = grads["agg"].reshape(-1, features.shape[1])
        d_features = A.T @ d_agg

        if self.attention is not None:
            d_omega = neighborhood.omega_gradient(d_agg, features)
            self.attention.backward(d_omega.astype(features.dtype))

        return np.asarray(d_features)
