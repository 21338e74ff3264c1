"""
Verificação de gradientes analíticos por diferenças finitas centrais
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from config.settings import NUMERIC_CONFIG
from ..core.attention import FeatureAttention
from ..core.geometry import PointCloud, radius_search
from ..core.kernel_layout import build_layout
from ..core.layers import Parameter
from ..core.spconv import ConvNeighborhood, SPConv
from ..models.blocks import ResidualBlock
from ..models.spnet import NetworkSpec, build_network
from ..utils.validators import require_choice
from .losses import cross_entropy_loss

logger = logging.getLogger(__name__)

GRADCHECK_TARGETS = ("spconv", "attention", "block", "model", "loss")


@dataclass
class GradcheckCase:
    """
    Problema de verificação: tensores, forward e backward

    `forward` devolve a saída para os valores atuais dos tensores;
    `backward(dout)` acumula dL/dθ em `Parameter.grad` de cada tensor.
    """

    name: str
    tensors: List[Parameter]
    forward: Callable[[], np.ndarray]
    backward: Callable[[np.ndarray], None]


def relative_error(analytic: float, numeric: float, floor: float) -> float:
    """|a − n| / max(|a| + |n|, floor)"""
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), floor)


def check_case(
    case: GradcheckCase,
    seed: int = 0,
    max_entries: int = 8,
    step: float = NUMERIC_CONFIG["gradcheck_step"],
    floor: float = NUMERIC_CONFIG["gradcheck_floor"],
    tolerance: float = NUMERIC_CONFIG["gradcheck_tolerance"],
) -> List[Dict]:
    """
    Compara gradientes analíticos e numéricos de cada tensor

    A perda é L = Σ saída · P, com P uma projeção aleatória fixa.

    Args:
        case: Problema a verificar
        seed: Semente da projeção e da escolha das entradas
        max_entries: Entradas amostradas por tensor
        step: Passo das diferenças centrais
        floor: Piso do denominador do erro relativo
        tolerance: Erro relativo máximo aceito

    Returns:
        Uma linha por tensor: name, max_error, checked, passed
    """
    rng = np.random.default_rng(seed)
    output = case.forward()
    projection = rng.standard_normal(output.shape) / np.sqrt(max(output.size, 1))

    for tensor in case.tensors:
        tensor.zero_grad()
    case.backward(projection.astype(output.dtype))
    analytic = {id(t): t.grad.copy() for t in case.tensors}

    results = []
    for tensor in case.tensors:
        count = min(tensor.size, max_entries)
        entries = rng.choice(tensor.size, size=count, replace=False) if count else []
        flat = tensor.value.reshape(-1)
        grad = analytic[id(tensor)].reshape(-1)
        worst = 0.0

        for index in entries:
            original = flat[index]
            flat[index] = original + step
            plus = case.forward()
            flat[index] = original - step
            minus = case.forward()
            flat[index] = original
            numeric = float(np.sum((plus - minus) * projection) / (2.0 * step))
            worst = max(worst, relative_error(float(grad[index]), numeric, floor))

        results.append(
            {
                "name": tensor.name,
                "max_error": worst,
                "checked": int(count),
                "passed": worst <= tolerance,
            }
        )
        if worst > tolerance:
            logger.warning(f"Gradiente divergente em {tensor.name}: erro {worst:.3e}")

    return results


def _random_cloud(rng, count: int, extent: float) -> PointCloud:
    normals = rng.normal(size=(count, 3))
    return PointCloud(
        positions=rng.uniform(0.0, extent, size=(count, 3)),
        colors=rng.uniform(0.0, 1.0, size=(count, 3)),
        normals=normals / np.linalg.norm(normals, axis=1, keepdims=True),
        labels=rng.integers(0, 3, size=count),
    )


def _layout(v: float = 1.0):
    return build_layout(3, 14, (1.5 * v, 3.0 * v), v, seed=42, use_cache=False)


def _input_tensor(rng, rows: int, width: int) -> Parameter:
    return Parameter("input", rng.standard_normal((rows, width)))


def _lift_attention_biases(tensors: List[Parameter], rng, low: float = 0.05, high: float = 0.2):
    """
    Afasta da dobra da ReLU os bias da MLP de atenção

    Pares (p, p) têm delta nulo; com bias zero a pré-ativação oculta fica
    exatamente em 0, onde a ReLU não é diferenciável.
    """
    for tensor in tensors:
        if ".attention.mlp" in f".{tensor.name}" and tensor.name.endswith(".b"):
            tensor.value[...] = rng.uniform(low, high, size=tensor.shape)


def build_case(
    target: str, seed: int = 0, points: int = 32, batch_norm: bool = False
) -> GradcheckCase:
    """
    Instância reduzida em precisão dupla para um alvo

    Args:
        target: "spconv", "attention", "block", "model" ou "loss"
        seed: Semente da instância
        points: Número de pontos (<= 64)
        batch_norm: Liga a BatchNorm em modo treino (spconv, block e model)

    Returns:
        GradcheckCase pronto para check_case
    """
    require_choice(target, GRADCHECK_TARGETS, "target")
    rng = np.random.default_rng(seed)
    points = min(points, 64)

    if target == "loss":
        logits = Parameter("logits", rng.standard_normal((points, 3)))
        labels = rng.integers(0, 3, size=points)

        def loss_backward(dout):
            _, grad = cross_entropy_loss(logits.value, labels)
            logits.grad += dout[0] * grad

        return GradcheckCase(
            "loss",
            [logits],
            lambda: np.array([cross_entropy_loss(logits.value, labels)[0]]),
            loss_backward,
        )

    if target == "attention":
        attention = FeatureAttention("attention", "mlp3", 6, 1.0, rng, 16, np.float64)
        delta = rng.standard_normal((points, 6))
        _lift_attention_biases(attention.parameters(), rng)

        return GradcheckCase(
            "attention",
            attention.parameters(),
            lambda: attention.forward(delta),
            attention.backward,
        )

    if target == "model":
        spec = NetworkSpec(
            encoder_levels=2,
            decoder_levels=1,
            base_channels=4,
            batch_norm=batch_norm,
            dtype="float64",
            v0=0.04,
            seed=seed,
        )
        model = build_network(spec, use_cache=False)
        _lift_attention_biases(model.parameters(), rng)
        pyramid = model.prepare(_random_cloud(rng, points, 0.3))

        return GradcheckCase(
            "model",
            model.parameters(),
            lambda: model.forward(pyramid, training=True),
            model.backward,
        )

    cloud = _random_cloud(rng, points, 3.0)
    layout = _layout()
    neighborhood = ConvNeighborhood(
        cloud.positions,
        cloud.positions,
        radius_search(cloud.positions, cloud.positions, 4.0),
        layout,
    )
    low = np.concatenate([cloud.colors, cloud.normals], axis=1)

    if target == "spconv":
        conv = SPConv("spconv", layout, 4, 8, rng, np.float64, batch_norm=batch_norm)
        features = _input_tensor(rng, points, 4)

        def spconv_backward(dout):
            features.grad += conv.backward(dout)

        return GradcheckCase(
            "spconv",
            conv.parameters() + [features],
            lambda: conv.forward(features.value, neighborhood, training=True),
            spconv_backward,
        )

    attention = FeatureAttention("block.conv.attention", "mlp3", 6, 1.0, rng, 16, np.float64)
    block = ResidualBlock(
        "block", 4, 8, layout, rng, np.float64, batch_norm=batch_norm, attention=attention
    )
    _lift_attention_biases(block.parameters(), rng)
    features = _input_tensor(rng, points, 4)

    def block_backward(dout):
        features.grad += block.backward(dout)

    return GradcheckCase(
        "block",
        block.parameters() + [features],
        lambda: block.forward(features.value, neighborhood, None, low, low, training=True),
        block_backward,
    )


def run_gradcheck(
    target: str,
    seed: int = 0,
    points: int = 32,
    max_entries: int = 8,
    batch_norm: bool = False,
) -> Tuple[List[Dict], bool]:
    """
    Executa o gradcheck de um alvo

    Com `batch_norm=True` a BatchNorm entra em modo treino e gamma/beta
    também são verificados.

    Returns:
        Tupla (resultados por tensor, True se todos passaram)
    """
    case = build_case(target, seed, points, batch_norm)
    results = check_case(case, seed=seed, max_entries=max_entries)
    passed = all(r["passed"] for r in results)
    logger.info(
        f"Gradcheck {target}{' (BN)' if batch_norm else ''}: {len(results)} tensores, "
        f"{'todos dentro da tolerância' if passed else 'com falhas'}"
    )
    return results, passed
