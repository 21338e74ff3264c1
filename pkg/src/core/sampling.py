"""
Subamostragem de nuvens: Poisson disk (subconjunto) e grade (baricentros)
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import PointCloud
from ..utils.validators import ParameterError

logger = logging.getLogger(__name__)


def canonical_order(positions: np.ndarray, *attributes: Optional[np.ndarray]) -> np.ndarray:
    """
    Ordem lexicográfica (x, y, z) dos pontos

    Empates de posição são desfeitos pelas colunas de `attributes`, na
    ordem dada, e só então pelo índice. A mesma nuvem em qualquer ordem de
    entrada produz a mesma sequência de pontos; pontos coincidentes com
    atributos diferentes não dependem da ordem de entrada.
    """
    positions = np.asarray(positions)
    keys = [positions[:, 0], positions[:, 1], positions[:, 2]]
    for attribute in attributes:
        if attribute is None or np.size(attribute) == 0:
            continue
        columns = np.asarray(attribute).reshape(len(positions), -1)
        keys.extend(columns[:, j] for j in range(columns.shape[1]))
    keys.append(np.arange(len(positions)))
    # lexsort usa a última chave como primária
    return np.lexsort(keys[::-1])


def cloud_order(cloud: PointCloud) -> np.ndarray:
    """Ordem canônica de uma nuvem: posição, cor, normal, features e rótulo"""
    return canonical_order(
        cloud.positions, cloud.colors, cloud.normals, cloud.features, cloud.labels
    )


def poisson_disk_sample(cloud: PointCloud, r_p: float, seed: int) -> np.ndarray:
    """
    Amostragem Poisson disk gulosa sobre uma permutação semeada

    Os pontos são visitados numa permutação (semeada) da ordem canônica e
    aceitos quando nenhum ponto já aceito está a distância < r_p. O resultado
    é maximal: todo ponto rejeitado está a menos de r_p de um aceito.

    Args:
        cloud: Nuvem de entrada
        r_p: Raio do disco em metros
        seed: Semente da permutação

    Returns:
        Índices (ordenados) do subconjunto aceito
    """
    if not r_p > 0:
        raise ParameterError(f"r_p deve ser > 0: {r_p}")

    positions = cloud.positions
    if len(positions) == 0:
        return np.zeros(0, dtype=np.int64)

    rng = np.random.default_rng(seed)
    visit = cloud_order(cloud)[rng.permutation(len(positions))]

    radius_sq = r_p * r_p
    cells = np.floor((positions - positions.min(axis=0)) / r_p).astype(np.int64)
    grid: Dict[Tuple[int, int, int], List[Tuple[float, float, float]]] = {}
    accepted = []

    coords = positions.tolist()
    cell_list = cells.tolist()

    for index in visit.tolist():
        x, y, z = coords[index]
        cx, cy, cz = cell_list[index]
        conflict = False

        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for ox, oy, oz in grid.get((cx + dx, cy + dy, cz + dz), ()):
                        ex, ey, ez = ox - x, oy - y, oz - z
                        if ex * ex + ey * ey + ez * ez < radius_sq:
                            conflict = True
                            break
                    if conflict:
                        break
                if conflict:
                    break

        if not conflict:
            grid.setdefault((cx, cy, cz), []).append((x, y, z))
            accepted.append(index)

    result = np.sort(np.asarray(accepted, dtype=np.int64))
    logger.debug(f"PDS r_p={r_p}: {len(positions)} -> {len(result)} pontos")
    return result


def grid_sample(cloud: PointCloud, cell_size: float) -> PointCloud:
    """
    Subamostragem por grade: um ponto por célula ocupada, no baricentro

    Cores e normais são a média da célula (normais renormalizadas, +z quando
    a média se anula); rótulos e features não são propagados.

    Args:
        cloud: Nuvem de entrada
        cell_size: Lado da célula em metros

    Returns:
        Nova PointCloud com um ponto por célula, em ordem de chave de célula
    """
    if not cell_size > 0:
        raise ParameterError(f"cell_size deve ser > 0: {cell_size}")

    positions = cloud.positions
    cells = np.floor((positions - positions.min(axis=0)) / cell_size).astype(np.int64)
    _, inverse, counts = np.unique(
        cells, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)

    def cell_mean(values: np.ndarray) -> np.ndarray:
        sums = np.zeros((len(counts), values.shape[1]), dtype=np.float64)
        np.add.at(sums, inverse, values)
        return sums / counts[:, None]

    colors = None if cloud.colors is None else cell_mean(cloud.colors)

    normals = None
    if cloud.normals is not None:
        normals = cell_mean(cloud.normals)
        norms = np.linalg.norm(normals, axis=1)
        vanished = norms < 1e-12
        normals[~vanished] /= norms[~vanished, None]
        normals[vanished] = (0.0, 0.0, 1.0)

    return PointCloud(positions=cell_mean(positions), colors=colors, normals=normals)
