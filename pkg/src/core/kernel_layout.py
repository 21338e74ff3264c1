"""
Disposição dos pontos de kernel em cascas e função de correlação linear
"""

import functools
import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import KERNEL_CONFIG, NUMERIC_CONFIG, get_cache_dir
from ..utils.file_handler import FileHandler
from ..utils.validators import ParameterError, require_positive

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sHIII")


@dataclass(frozen=True)
class KernelLayout:
    """
    Pontos de kernel (deslocamentos a partir do ponto de consulta)

    Attributes:
        points: Deslocamentos (K_total, 3); o índice 0 é o ponto central
        shell_radii: Raio de cada casca; a primeira casca tem raio 0
        shell_sizes: Número de pontos por casca
        influence: Raio de influência v em metros
    """

    points: np.ndarray
    shell_radii: Tuple[float, ...]
    shell_sizes: Tuple[int, ...]
    influence: float

    @property
    def num_shells(self) -> int:
        return len(self.shell_sizes)

    @property
    def total_kernel_count(self) -> int:
        return int(sum(self.shell_sizes))

    @property
    def shell_slices(self) -> List[slice]:
        bounds = np.concatenate([[0], np.cumsum(self.shell_sizes)])
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    @property
    def shell_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_shells), self.shell_sizes)

    def shell_points(self, shell: int) -> np.ndarray:
        return self.points[self.shell_slices[shell]]


def repulsion_energy(directions: np.ndarray) -> float:
    """Potencial repulsivo Σ 1/‖a − b‖ sobre pares distintos"""
    if len(directions) < 2:
        return 0.0
    diff = directions[:, None, :] - directions[None, :, :]
    dist = np.sqrt(np.einsum("ijc,ijc->ij", diff, diff))
    upper = np.triu_indices(len(directions), k=1)
    return float(np.sum(1.0 / dist[upper]))


def random_directions(count: int, seed: int) -> np.ndarray:
    """Direções unitárias semeadas (inicialização da repulsão)"""
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(count, 3))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


@functools.lru_cache(maxsize=32)
def _optimized_directions(count: int, seed: int) -> Tuple[Tuple[float, float, float], ...]:
    directions = random_directions(count, seed)
    if count < 2:
        return tuple(map(tuple, directions))

    step = KERNEL_CONFIG["repulsion_step"] / count
    tolerance = KERNEL_CONFIG["repulsion_tolerance"]
    eye = np.eye(count, dtype=bool)

    for iteration in range(KERNEL_CONFIG["repulsion_iterations"]):
        diff = directions[:, None, :] - directions[None, :, :]
        dist = np.sqrt(np.einsum("ijc,ijc->ij", diff, diff))
        dist[eye] = np.inf
        # ∂E/∂a_i = −Σ_j (a_i − a_j) / ‖a_i − a_j‖³
        gradient = -np.einsum("ij,ijc->ic", 1.0 / dist**3, diff)
        tangent = gradient - np.sum(gradient * directions, axis=1, keepdims=True) * directions

        if np.linalg.norm(tangent) < tolerance:
            logger.debug(f"Repulsão convergiu em {iteration} iterações")
            break

        directions = directions - step * tangent
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    return tuple(map(tuple, directions))


def _cache_path(cache_dir: Path, key: str) -> Path:
    digest = hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]
    return cache_dir / f"layout_{digest}.spkl"


def _read_cache(path: Path, total: int) -> Optional[np.ndarray]:
    try:
        data = path.read_bytes()
        magic, version, _, _, count = _HEADER.unpack_from(data)
    except (OSError, struct.error):
        return None

    if magic != KERNEL_CONFIG["cache_magic"] or version != KERNEL_CONFIG["cache_version"]:
        logger.warning(f"Cache de kernel ignorado (cabeçalho inválido): {path}")
        return None
    if count != total or len(data) != _HEADER.size + count * 3 * 8:
        logger.warning(f"Cache de kernel ignorado (tamanho inválido): {path}")
        return None

    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(count, 3).copy()


def encode_layout(layout: KernelLayout) -> bytes:
    """Serializa a disposição no formato do cache (cabeçalho + float64)"""
    header = _HEADER.pack(
        KERNEL_CONFIG["cache_magic"],
        KERNEL_CONFIG["cache_version"],
        layout.num_shells,
        layout.shell_sizes[-1] if layout.num_shells > 1 else 0,
        layout.total_kernel_count,
    )
    return header + np.ascontiguousarray(layout.points, dtype="<f8").tobytes()


def build_layout(
    num_shells: int,
    points_per_outer_shell: int,
    shell_radii: Sequence[float],
    influence: float,
    seed: int,
    cache_dir: Optional[Path] = None,
    use_cache: bool = True,
) -> KernelLayout:
    """
    Constrói a disposição de kernel: ponto central + cascas esféricas

    As direções de cada casca externa minimizam o potencial repulsivo sobre a
    esfera unitária (descida de gradiente projetada a partir de uma
    inicialização semeada) e são reutilizadas, escaladas, em todas as cascas.

    Args:
        num_shells: Número de cascas (>= 1)
        points_per_outer_shell: Pontos em cada casca externa
        shell_radii: Raios das cascas externas, estritamente crescentes
        influence: Raio de influência v
        seed: Semente da inicialização
        cache_dir: Diretório de cache (padrão de config.settings)
        use_cache: Se deve ler/escrever o cache em disco

    Returns:
        KernelLayout determinística para as entradas
    """
    if num_shells < 1:
        raise ParameterError(f"num_shells deve ser >= 1: {num_shells}")
    if points_per_outer_shell < 1:
        raise ParameterError(
            f"points_per_outer_shell deve ser >= 1: {points_per_outer_shell}"
        )
    require_positive(influence, "influence")

    radii = [float(r) for r in shell_radii]
    if len(radii) != num_shells - 1:
        raise ParameterError(
            f"Esperados {num_shells - 1} raios de casca, recebidos {len(radii)}"
        )
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ParameterError(f"Raios de casca devem ser positivos e crescentes: {radii}")

    shell_sizes = (1,) + (points_per_outer_shell,) * (num_shells - 1)
    total = sum(shell_sizes)

    cache_dir = cache_dir if cache_dir is not None else get_cache_dir()
    key = repr((num_shells, points_per_outer_shell, tuple(radii), float(influence), seed))
    path = _cache_path(cache_dir, key) if (use_cache and cache_dir is not None) else None

    points = _read_cache(path, total) if path is not None else None
    if points is not None:
        logger.debug(f"Disposição de kernel lida do cache: {path}")
    else:
        points = np.zeros((1, 3))
        if num_shells > 1:
            directions = np.asarray(_optimized_directions(points_per_outer_shell, seed))
            points = np.concatenate([points] + [directions * r for r in radii], axis=0)

    layout = KernelLayout(
        points=points,
        shell_radii=(0.0,) + tuple(radii),
        shell_sizes=shell_sizes,
        influence=float(influence),
    )

    if path is not None and not path.exists():
        try:
            FileHandler().write_bytes_atomic(encode_layout(layout), path)
            logger.info(f"Disposição de kernel salva no cache: {path}")
        except OSError as e:
            logger.warning(f"Não foi possível gravar o cache de kernel: {e}")

    return layout


def correlation(kernel_point, neighbor_offset, influence: float) -> float:
    """
    Correlação linear max(0, 1 − ‖p_k − p_j‖ / v)

    Args:
        kernel_point: Deslocamento do ponto de kernel
        neighbor_offset: Deslocamento do vizinho em relação à consulta
        influence: Raio de influência v (> 0)

    Returns:
        Peso em [0, 1]
    """
    require_positive(influence, "influence")
    diff = np.asarray(kernel_point, dtype=np.float64) - np.asarray(
        neighbor_offset, dtype=np.float64
    )
    distance = float(np.sqrt(np.dot(diff, diff)))
    return max(0.0, 1.0 - distance / influence)


def correlation_matrix(layout: KernelLayout, offsets: np.ndarray) -> np.ndarray:
    """
    Correlações de M deslocamentos com todos os pontos de kernel

    Args:
        layout: Disposição de kernel
        offsets: Deslocamentos dos vizinhos (M, 3)

    Returns:
        Matriz (M, K_total) com valores em [0, 1]
    """
    diff = offsets[:, None, :] - layout.points[None, :, :]
    distance = np.sqrt(np.einsum("mkc,mkc->mk", diff, diff))
    return np.maximum(0.0, 1.0 - distance / layout.influence)


def influence_coverage(
    layout: KernelLayout, radius: float, samples: int = 100000, seed: int = 0
) -> float:
    """
    Fração (Monte Carlo) da bola de raio `radius` coberta pelas bolas de influência

    Args:
        layout: Disposição de kernel
        radius: Raio da bola amostrada
        samples: Número de amostras uniformes
        seed: Semente

    Returns:
        Fração em [0, 1]
    """
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(samples, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    points = directions * radius * rng.random(samples)[:, None] ** (1.0 / 3.0)

    covered = np.zeros(samples, dtype=bool)
    chunk = NUMERIC_CONFIG["chunk_size"]
    for start in range(0, samples, chunk):
        block = correlation_matrix(layout, points[start : start + chunk])
        covered[start : start + chunk] = block.max(axis=1) > 0.0

    return float(covered.mean())
