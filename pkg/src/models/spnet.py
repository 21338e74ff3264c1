"""
Rede SPNet: encoder de 5 níveis com subamostragem Poisson disk, decoder
com propagação de features e cabeça de classificação por ponto
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from scipy import sparse

from config.settings import DEFAULT_CONFIG, LEVEL_RULES, NUMERIC_CONFIG
from ..core.attention import ATTENTION_INPUTS, ATTENTION_VARIANTS, FeatureAttention, low_level_features
from ..core.geometry import PointCloud, knn_search, radius_search
from ..core.kernel_layout import KernelLayout, build_layout
from ..core.layers import Module
from ..core.sampling import cloud_order, grid_sample, poisson_disk_sample
from ..core.spconv import ConvNeighborhood
from ..utils.validators import (
    DegenerateInputError,
    InputError,
    ParameterError,
    StateError,
    require_choice,
    require_positive,
)
from .blocks import Classifier, ResidualBlock

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelConfig:
    """
    Raios e largura de um nível da rede

    Attributes:
        level: Índice do nível
        v: Raio de influência v_l = 2^l · v_0
        query_radius: R_l = 4·v_l
        shell_radii: Raios das cascas externas (1.5·v_l e 3·v_l por padrão)
        pds_radius: Raio da amostragem Poisson disk (0.75·v_l)
        channels: Largura das features C_l
    """

    level: int
    v: float
    query_radius: float
    shell_radii: tuple
    pds_radius: float
    channels: int

    @property
    def r2(self) -> float:
        return self.shell_radii[0]

    @property
    def r3(self) -> float:
        return self.shell_radii[-1]

    @classmethod
    def for_level(cls, level: int, v0: float, base_channels: int, num_shells: int = 3):
        require_positive(v0, "v0")
        v = v0 * 2.0**level
        rules = LEVEL_RULES["shell_radii"]
        outer = num_shells - 1
        if outer == len(rules):
            multipliers = rules
        else:
            multipliers = tuple(rules[-1] * (i + 1) / outer for i in range(outer))
        return cls(
            level=level,
            v=v,
            query_radius=LEVEL_RULES["query_radius"] * v,
            shell_radii=tuple(m * v for m in multipliers),
            pds_radius=LEVEL_RULES["pds_radius"] * v,
            channels=base_channels * 2**level,
        )


@dataclass
class NetworkSpec:
    """
    Arquitetura da rede (serializada no checkpoint como texto chave = valor)
    """

    num_classes: int = DEFAULT_CONFIG["num_classes"]
    input_channels: int = DEFAULT_CONFIG["input_channels"]
    encoder_levels: int = DEFAULT_CONFIG["encoder_levels"]
    decoder_levels: int = DEFAULT_CONFIG["decoder_levels"]
    base_channels: int = DEFAULT_CONFIG["base_channels"]
    encoder_blocks: int = DEFAULT_CONFIG["encoder_blocks"]
    decoder_blocks: int = DEFAULT_CONFIG["decoder_blocks"]
    bottleneck_ratio: float = DEFAULT_CONFIG["bottleneck_ratio"]
    batch_norm: bool = DEFAULT_CONFIG["batch_norm"]
    kernel_mode: str = DEFAULT_CONFIG["kernel_mode"]
    num_shells: int = DEFAULT_CONFIG["num_shells"]
    points_per_shell: int = DEFAULT_CONFIG["points_per_shell"]
    kernel_seed: int = DEFAULT_CONFIG["kernel_seed"]
    attention_variant: str = DEFAULT_CONFIG["attention_variant"]
    attention_input: str = DEFAULT_CONFIG["attention_input"]
    attention_hidden: int = DEFAULT_CONFIG["attention_hidden"]
    sampler: str = DEFAULT_CONFIG["sampler"]
    upsampling: str = DEFAULT_CONFIG["upsampling"]
    fp_k: int = DEFAULT_CONFIG["fp_k"]
    fp_weighting: str = DEFAULT_CONFIG["fp_weighting"]
    dtype: str = "float32"
    v0: float = DEFAULT_CONFIG["v0"]
    seed: int = DEFAULT_CONFIG["seed"]

    def validate(self) -> "NetworkSpec":
        require_positive(self.v0, "v0")
        for name in ("num_classes", "encoder_levels", "base_channels", "encoder_blocks",
                     "decoder_blocks", "num_shells", "points_per_shell", "fp_k",
                     "attention_hidden"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} deve ser >= 1: {getattr(self, name)}")
        if self.decoder_levels != self.encoder_levels - 1:
            raise ParameterError(
                f"decoder_levels deve ser encoder_levels - 1: {self.decoder_levels}"
            )
        if self.input_channels != 7:
            raise ParameterError("input_channels deve ser 7 (RGB + normal + constante)")
        require_choice(self.kernel_mode, ("spconv", "kpconv"), "kernel_mode")
        require_choice(self.attention_variant, ATTENTION_VARIANTS, "attention_variant")
        require_choice(self.attention_input, ATTENTION_INPUTS, "attention_input")
        require_choice(self.sampler, ("pds", "grid"), "sampler")
        require_choice(self.upsampling, ("fp", "nearest"), "upsampling")
        require_choice(self.fp_weighting, ("inverse_square", "inverse"), "fp_weighting")
        require_choice(self.dtype, ("float32", "float64"), "dtype")
        return self

    def to_text(self) -> str:
        """Serializa como linhas `chave = valor`"""
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in dataclasses.fields(self))

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "NetworkSpec":
        """Constrói a partir de um dicionário (valores em texto são convertidos)"""
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in known:
                raise ParameterError(f"Chave de arquitetura desconhecida: {key}")
            kwargs[key] = coerce_value(value, type(known[key].default))
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "NetworkSpec":
        values = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            if "=" not in line:
                raise InputError(f"Linha de arquitetura inválida: {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
        return cls.from_mapping(values)


def coerce_value(value: Any, kind: type) -> Any:
    """Converte um valor de configuração para o tipo do campo"""
    if not isinstance(value, str):
        return kind(value) if kind in (int, float) and not isinstance(value, bool) else value
    text = value.strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "sim"):
                return True
            if lowered in ("false", "0", "no", "nao", "não"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is tuple:
            return tuple(float(part) for part in text.strip("()").split(",") if part.strip())
    except ValueError:
        raise ParameterError(f"Valor inválido para {kind.__name__}: {value!r}")
    return text


def interpolation_weights(coarse_points, fine_points, k: int, weighting: str = "inverse_square"):
    """
    Pesos da propagação de features dos k vizinhos grossos mais próximos

    Com d_k = 1/distância, w_k = d_k² / Σ d_k² ("inverse_square") ou
    w_k = d_k / Σ d_k ("inverse"). Um ponto grosso coincidente
    (distância < 1e-12) recebe peso 1 e os demais 0.

    Returns:
        Tupla (índices (F, k), pesos (F, k)); k é limitado ao número de
        pontos grossos
    """
    require_choice(weighting, ("inverse_square", "inverse"), "fp_weighting")
    indices, distances = knn_search(fine_points, coarse_points, k)

    coincident = distances[:, 0] < NUMERIC_CONFIG["coincidence_threshold"]
    safe = np.where(coincident[:, None], 1.0, distances)
    inverse = 1.0 / safe
    if weighting == "inverse_square":
        inverse = inverse * inverse
    weights = inverse / inverse.sum(axis=1, keepdims=True)

    weights[coincident] = 0.0
    weights[coincident, 0] = 1.0
    return indices, weights


def interpolation_matrix(coarse_points, fine_points, k: int, weighting: str = "inverse_square"):
    """Matriz esparsa (F, C) da propagação de features"""
    indices, weights = interpolation_weights(coarse_points, fine_points, k, weighting)
    rows = np.repeat(np.arange(len(indices)), indices.shape[1])
    keep = weights.reshape(-1) > 0
    return sparse.csr_matrix(
        (weights.reshape(-1)[keep], (rows[keep], indices.reshape(-1)[keep])),
        shape=(len(indices), len(coarse_points)),
    )


def propagate_features(
    coarse_points, coarse_features, fine_points, k: int = 3, weighting: str = "inverse_square"
) -> np.ndarray:
    """
    Propaga features de pontos grossos para pontos finos

    Args:
        coarse_points: Pontos grossos (C, 3), não vazio
        coarse_features: Features dos pontos grossos (C, F)
        fine_points: Pontos finos (N, 3)
        k: Número de vizinhos (limitado a C)
        weighting: "inverse_square" ou "inverse"

    Returns:
        Features dos pontos finos (N, F)
    """
    if k < 1:
        raise ParameterError(f"k deve ser >= 1: {k}")
    matrix = interpolation_matrix(coarse_points, fine_points, k, weighting)
    return np.asarray(matrix @ np.asarray(coarse_features))


@dataclass
class Pyramid:
    """
    Estruturas geométricas de uma nuvem (independentes dos pesos)

    Attributes:
        order: Ordem canônica aplicada à nuvem de entrada
        levels: Nuvem de cada nível (ordem canônica)
        original_index: Índices de cada nível na nuvem original
        parent_index: Para l >= 1, índice em l-1 de cada ponto do nível l
        neighborhoods: Vizinhança de cada nível sobre si mesmo (raio R_l)
        strided: Para l >= 1, vizinhança nível l ← nível l-1 (raio R_{l-1})
        upsample: Para l < L-1, matriz de propagação nível l+1 → nível l
        low: Features de baixo nível por nível (None sem atenção)
        features: Features de entrada do nível 0 (RGB, normal, 1)
    """

    order: np.ndarray
    levels: List[PointCloud]
    original_index: List[np.ndarray]
    parent_index: List[Optional[np.ndarray]]
    neighborhoods: List[ConvNeighborhood]
    strided: List[Optional[ConvNeighborhood]]
    upsample: List[sparse.csr_matrix]
    low: List[Optional[np.ndarray]]
    features: np.ndarray

    @property
    def point_counts(self) -> List[int]:
        return [len(level) for level in self.levels]


@dataclass
class EncodedCloud:
    """Saída do encoder: pontos, índices na nuvem original e features por nível"""

    levels: List[PointCloud]
    original_index: List[np.ndarray]
    features: List[np.ndarray] = field(default_factory=list)


class SPNet(Module):
    """
    Rede de segmentação em U com blocos residuais SPConv

    Args:
        spec: Arquitetura validada
        cache_dir: Diretório do cache de disposições de kernel
        use_cache: Se deve usar o cache em disco
    """

    def __init__(self, spec: NetworkSpec, cache_dir=None, use_cache: bool = True):
        super().__init__("spnet")
        self.spec = spec.validate()
        self.dtype = np.dtype(spec.dtype)
        rng = np.random.default_rng(spec.seed)

        num_shells = 2 if spec.kernel_mode == "kpconv" else spec.num_shells
        self.level_configs = [
            LevelConfig.for_level(l, spec.v0, spec.base_channels, num_shells)
            for l in range(spec.encoder_levels)
        ]
        if spec.kernel_mode == "kpconv":
            self.level_configs = [
                dataclasses.replace(
                    cfg, shell_radii=(LEVEL_RULES["baseline_shell_radius"] * cfg.v,)
                )
                for cfg in self.level_configs
            ]

        self.layouts: List[KernelLayout] = [
            build_layout(
                num_shells,
                spec.points_per_shell,
                cfg.shell_radii,
                cfg.v,
                spec.kernel_seed,
                cache_dir=cache_dir,
                use_cache=use_cache,
            )
            for cfg in self.level_configs
        ]

        self.low_width = 6 if spec.attention_input == "color+normal" else 3

        self.encoder: List[List[ResidualBlock]] = []
        c_prev = spec.input_channels
        for l, cfg in enumerate(self.level_configs):
            blocks = []
            for b in range(spec.encoder_blocks):
                layout = self.layouts[l - 1] if (l > 0 and b == 0) else self.layouts[l]
                blocks.append(self._block(f"enc{l}.block{b}", c_prev, cfg.channels, layout, rng))
                c_prev = cfg.channels
            self.encoder.append(blocks)

        self.decoder: List[List[ResidualBlock]] = [[] for _ in range(spec.decoder_levels)]
        for l in range(spec.decoder_levels - 1, -1, -1):
            cfg = self.level_configs[l]
            c_in = self.level_configs[l + 1].channels + cfg.channels
            for b in range(spec.decoder_blocks):
                self.decoder[l].append(
                    self._block(f"dec{l}.block{b}", c_in, cfg.channels, self.layouts[l], rng)
                )
                c_in = cfg.channels

        self.head = self.register_module(
            Classifier(
                "head",
                self.level_configs[0].channels,
                spec.num_classes,
                rng,
                self.dtype,
                spec.batch_norm,
            )
        )
        self._cache = None
        logger.info(
            f"SPNet construída: {spec.encoder_levels} níveis, "
            f"{self.parameter_count()} parâmetros treináveis"
        )

    def _block(self, name, c_in, c_out, layout: KernelLayout, rng) -> ResidualBlock:
        attention = FeatureAttention(
            f"{name}.conv.attention",
            self.spec.attention_variant,
            self.low_width,
            layout.influence,
            rng,
            self.spec.attention_hidden,
            self.dtype,
        )
        block = ResidualBlock(
            name,
            c_in,
            c_out,
            layout,
            rng,
            self.dtype,
            self.spec.batch_norm,
            self.spec.bottleneck_ratio,
            attention,
        )
        return self.register_module(block)

    @property
    def num_levels(self) -> int:
        return self.spec.encoder_levels

    def prepare(self, cloud: PointCloud) -> Pyramid:
        """
        Calcula a pirâmide de níveis e as vizinhanças de uma nuvem

        A nuvem é colocada em ordem canônica antes de qualquer cálculo.

        Args:
            cloud: Nuvem com cores e normais

        Returns:
            Pyramid reutilizável entre épocas
        """
        missing = cloud.missing_attributes()
        if missing:
            raise InputError(f"Atributos ausentes: {', '.join(missing)}", missing=missing)
        if len(cloud) == 0:
            raise DegenerateInputError("Nível 0 vazio: nuvem sem pontos", level=0)

        order = cloud_order(cloud)
        levels = [cloud.subset(order)]
        original_index = [order]
        parent_index: List[Optional[np.ndarray]] = [None]

        for l in range(1, self.num_levels):
            cfg = self.level_configs[l]
            previous = levels[-1]
            if self.spec.sampler == "pds":
                chosen = poisson_disk_sample(previous, cfg.pds_radius, self.spec.seed + l)
                level = previous.subset(chosen)
                parent = chosen
            else:
                level = grid_sample(previous, cfg.pds_radius)
                level = level.subset(cloud_order(level))
                parent = knn_search(level.positions, previous.positions, 1)[0][:, 0]

            if len(level) == 0:
                raise DegenerateInputError(f"Nível {l} ficou vazio", level=l)

            levels.append(level)
            parent_index.append(parent)
            original_index.append(original_index[-1][parent])
            logger.debug(f"Nível {l}: {len(level)} pontos (r_p={cfg.pds_radius})")

        neighborhoods = []
        strided: List[Optional[ConvNeighborhood]] = [None]
        for l, level in enumerate(levels):
            cfg = self.level_configs[l]
            points = level.positions
            neighborhoods.append(
                ConvNeighborhood(
                    points, points, radius_search(points, points, cfg.query_radius), self.layouts[l]
                )
            )
            if l > 0:
                support = levels[l - 1].positions
                radius = self.level_configs[l - 1].query_radius
                strided.append(
                    ConvNeighborhood(
                        points, support, radius_search(points, support, radius), self.layouts[l - 1]
                    )
                )

        k = 1 if self.spec.upsampling == "nearest" else self.spec.fp_k
        upsample = [
            interpolation_matrix(
                levels[l + 1].positions, levels[l].positions, k, self.spec.fp_weighting
            ).astype(self.dtype)
            for l in range(self.num_levels - 1)
        ]

        if self.spec.attention_variant == "none":
            low: List[Optional[np.ndarray]] = [None] * len(levels)
        else:
            low = [low_level_features(level, self.spec.attention_input) for level in levels]

        base = levels[0]
        features = np.concatenate(
            [base.colors, base.normals, np.ones((len(base), 1))], axis=1
        ).astype(self.dtype)

        return Pyramid(
            order=order,
            levels=levels,
            original_index=original_index,
            parent_index=parent_index,
            neighborhoods=neighborhoods,
            strided=strided,
            upsample=upsample,
            low=low,
            features=features,
        )

    def _run_encoder(self, pyramid: Pyramid, training: bool) -> List[np.ndarray]:
        x = pyramid.features
        outputs = []
        for l, blocks in enumerate(self.encoder):
            for b, block in enumerate(blocks):
                if l > 0 and b == 0:
                    x = block.forward(
                        x,
                        pyramid.strided[l],
                        pyramid.parent_index[l],
                        pyramid.low[l],
                        pyramid.low[l - 1],
                        training,
                    )
                else:
                    x = block.forward(
                        x, pyramid.neighborhoods[l], None, pyramid.low[l], pyramid.low[l], training
                    )
            outputs.append(x)
        return outputs

    def encode(self, cloud: PointCloud, training: bool = False) -> EncodedCloud:
        """
        Executa apenas o encoder

        Args:
            cloud: Nuvem de entrada
            training: Modo de treino das batch norms

        Returns:
            EncodedCloud com pontos, índices e features de cada nível
        """
        pyramid = self.prepare(cloud)
        features = self._run_encoder(pyramid, training)
        return EncodedCloud(pyramid.levels, pyramid.original_index, features)

    def forward(self, cloud, training: bool = False) -> np.ndarray:
        """
        Logits por ponto na ordem original da nuvem

        Args:
            cloud: PointCloud ou Pyramid já preparada
            training: Modo de treino das batch norms

        Returns:
            Logits (N, num_classes)
        """
        pyramid = cloud if isinstance(cloud, Pyramid) else self.prepare(cloud)
        skips = self._run_encoder(pyramid, training)

        x = skips[-1]
        widths = []
        for l in range(self.spec.decoder_levels - 1, -1, -1):
            up = np.asarray(pyramid.upsample[l] @ x)
            widths.append(up.shape[1])
            x = np.concatenate([up, skips[l]], axis=1)
            for block in self.decoder[l]:
                x = block.forward(
                    x, pyramid.neighborhoods[l], None, pyramid.low[l], pyramid.low[l], training
                )

        logits = self.head.forward(x, training)
        output = np.empty_like(logits)
        output[pyramid.order] = logits
        self._cache = (pyramid, widths[::-1])
        return output

    def backward(self, dlogits: np.ndarray) -> None:
        """Acumula os gradientes de todos os parâmetros a partir de dL/dlogits"""
        if self._cache is None:
            raise StateError("SPNet: backward sem forward")
        pyramid, widths = self._cache

        d = self.head.backward(dlogits[pyramid.order].astype(self.dtype))
        d_skips: List[Optional[np.ndarray]] = [None] * self.num_levels
        for l in range(self.spec.decoder_levels):
            for block in reversed(self.decoder[l]):
                d = block.backward(d)
            d_up, d_skips[l] = d[:, : widths[l]], d[:, widths[l] :]
            d = np.asarray(pyramid.upsample[l].T @ d_up)

        for l in range(self.num_levels - 1, -1, -1):
            if d_skips[l] is not None:
                d = d + d_skips[l]
            for block in reversed(self.encoder[l]):
                d = block.backward(d)


def build_network(spec: NetworkSpec, v0: Optional[float] = None, seed: Optional[int] = None,
                  cache_dir=None, use_cache: bool = True) -> SPNet:
    """
    Constrói a rede com inicialização He determinística

    Args:
        spec: Arquitetura
        v0: Raio de influência do nível 0 (sobrescreve spec.v0)
        seed: Semente da inicialização e da amostragem (sobrescreve spec.seed)
        cache_dir: Diretório do cache de disposições de kernel
        use_cache: Se deve usar o cache em disco

    Returns:
        SPNet pronta para forward/backward
    """
    overrides: Dict[str, Any] = {}
    if v0 is not None:
        overrides["v0"] = float(v0)
    if seed is not None:
        overrides["seed"] = int(seed)
    return SPNet(dataclasses.replace(spec, **overrides), cache_dir=cache_dir, use_cache=use_cache)


def encode(model: SPNet, cloud: PointCloud) -> EncodedCloud:
    """Pontos, índices e features de cada nível do encoder (modo avaliação)"""
    return model.encode(cloud, training=False)
