"""
Containers de nuvem de pontos e busca de vizinhança por raio
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from config.settings import NUMERIC_CONFIG
from ..utils.validators import (
    InputError,
    ParameterError,
    ShapeError,
    require_points,
    require_positive,
)

logger = logging.getLogger(__name__)

# Deslocamentos das 27 células vizinhas de uma célula da grade
_CELL_OFFSETS = np.array(
    [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)],
    dtype=np.int64,
)


@dataclass
class PointCloud:
    """
    Nuvem de pontos com atributos opcionais por ponto

    Attributes:
        positions: Coordenadas (N, 3) em metros
        colors: RGB (N, 3) em [0, 1] ou None
        normals: Normais unitárias (N, 3) ou None
        features: Features (N, C); largura 0 quando ausentes
        labels: Classe por ponto (N,) ou None
    """

    positions: np.ndarray
    colors: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None
    features: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.positions = require_points(self.positions, "positions")
        count = len(self.positions)

        if self.features is None:
            self.features = np.zeros((count, 0), dtype=np.float64)

        for name in ("colors", "normals", "features", "labels"):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.asarray(value)
            if len(value) != count:
                raise ShapeError(
                    f"{name} tem {len(value)} linhas, positions tem {count}"
                )
            setattr(self, name, value)

        if self.colors is not None:
            self.colors = self.colors.astype(np.float64)
            if self.colors.shape[1:] != (3,):
                raise ShapeError(f"colors deve ter formato (N, 3): {self.colors.shape}")

        if self.normals is not None:
            self.normals = self.normals.astype(np.float64)
            if self.normals.shape[1:] != (3,):
                raise ShapeError(
                    f"normals deve ter formato (N, 3): {self.normals.shape}"
                )
            norms = np.linalg.norm(self.normals, axis=1)
            if np.any(np.abs(norms - 1.0) > NUMERIC_CONFIG["normal_tolerance"]):
                raise InputError("normals devem ter norma unitária (tolerância 1e-6)")

        if self.labels is not None:
            self.labels = self.labels.astype(np.int64)

    def __len__(self) -> int:
        return len(self.positions)

    def subset(self, indices: np.ndarray) -> "PointCloud":
        """
        Retorna a sub-nuvem com os pontos indicados (atributos preservados)

        Args:
            indices: Índices dos pontos a manter

        Returns:
            Nova PointCloud
        """
        indices = np.asarray(indices, dtype=np.int64)

        def pick(array):
            return None if array is None else array[indices]

        return PointCloud(
            positions=self.positions[indices],
            colors=pick(self.colors),
            normals=pick(self.normals),
            features=pick(self.features),
            labels=pick(self.labels),
        )

    def translated(self, offset) -> "PointCloud":
        """Cópia da nuvem transladada por um vetor"""
        return PointCloud(
            positions=self.positions + np.asarray(offset, dtype=np.float64),
            colors=self.colors,
            normals=self.normals,
            features=self.features,
            labels=self.labels,
        )

    def missing_attributes(self, required=("colors", "normals")) -> List[str]:
        """Lista os atributos exigidos que estão ausentes"""
        return [name for name in required if getattr(self, name) is None]


@dataclass
class NeighborhoodIndex:
    """
    Resultado de uma busca por raio em formato CSR

    A lista de vizinhos da consulta i é `indices[offsets[i]:offsets[i + 1]]`,
    em ordem crescente de índice de suporte.
    """

    query_count: int
    offsets: np.ndarray
    indices: np.ndarray
    radius: float
    support_count: int = 0

    @property
    def neighbor_lists(self) -> List[np.ndarray]:
        return [
            self.indices[self.offsets[i] : self.offsets[i + 1]]
            for i in range(self.query_count)
        ]

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def pair_count(self) -> int:
        return int(self.offsets[-1])

    def pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Pares (consulta, suporte) ordenados por consulta e depois suporte"""
        queries = np.repeat(np.arange(self.query_count, dtype=np.int64), self.counts)
        return queries, self.indices

    @classmethod
    def from_pairs(
        cls,
        query_ids: np.ndarray,
        support_ids: np.ndarray,
        query_count: int,
        radius: float,
        support_count: int = 0,
    ) -> "NeighborhoodIndex":
        order = np.lexsort((support_ids, query_ids))
        query_ids = query_ids[order]
        support_ids = support_ids[order]

        offsets = np.zeros(query_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(query_ids, minlength=query_count), out=offsets[1:])

        return cls(
            query_count=query_count,
            offsets=offsets,
            indices=support_ids.astype(np.int64),
            radius=radius,
            support_count=support_count,
        )


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distâncias quadráticas linha a linha entre dois arrays (M, 3)"""
    diff = a - b
    return diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1] + diff[:, 2] * diff[:, 2]


def _validate_search(queries, supports, radius) -> Tuple[np.ndarray, np.ndarray]:
    require_positive(radius, "radius")
    queries = require_points(queries, "queries")
    supports = require_points(supports, "supports")
    if len(queries) == 0 or len(supports) == 0:
        raise ParameterError("Conjuntos de pontos não podem ser vazios")
    return queries, supports


def radius_search(queries, supports, radius: float) -> NeighborhoodIndex:
    """
    Busca por raio (bola aberta) via grade hash uniforme de lado `radius`

    Args:
        queries: Pontos de consulta (Q, 3)
        supports: Pontos de suporte (S, 3)
        radius: Raio da bola em metros

    Returns:
        NeighborhoodIndex com, para cada consulta, os suportes a distância < radius
    """
    queries, supports = _validate_search(queries, supports, radius)
    radius_sq = radius * radius

    origin = np.minimum(queries.min(axis=0), supports.min(axis=0))
    support_cells = np.floor((supports - origin) / radius).astype(np.int64)
    query_cells = np.floor((queries - origin) / radius).astype(np.int64)

    # Chave linear com uma célula de margem em cada eixo
    extent = np.maximum(support_cells.max(axis=0), query_cells.max(axis=0)) + 3
    strides = np.array([1, extent[0], extent[0] * extent[1]], dtype=np.int64)

    support_keys = (support_cells + 1) @ strides
    order = np.argsort(support_keys, kind="stable")
    sorted_keys = support_keys[order]

    query_parts, support_parts = [], []
    query_range = np.arange(len(queries), dtype=np.int64)

    for offset in _CELL_OFFSETS:
        keys = (query_cells + 1 + offset) @ strides
        start = np.searchsorted(sorted_keys, keys, side="left")
        stop = np.searchsorted(sorted_keys, keys, side="right")
        counts = stop - start
        total = int(counts.sum())
        if total == 0:
            continue

        candidate_queries = np.repeat(query_range, counts)
        # Posição de cada candidato dentro do bloco ordenado da célula
        within = np.arange(total, dtype=np.int64) - np.repeat(
            np.cumsum(counts) - counts, counts
        )
        candidate_supports = order[np.repeat(start, counts) + within]

        d2 = _squared_distances(
            supports[candidate_supports], queries[candidate_queries]
        )
        mask = d2 < radius_sq
        query_parts.append(candidate_queries[mask])
        support_parts.append(candidate_supports[mask])

    if query_parts:
        query_ids = np.concatenate(query_parts)
        support_ids = np.concatenate(support_parts)
    else:
        query_ids = np.zeros(0, dtype=np.int64)
        support_ids = np.zeros(0, dtype=np.int64)

    index = NeighborhoodIndex.from_pairs(
        query_ids, support_ids, len(queries), radius, len(supports)
    )
    logger.debug(
        f"radius_search: {len(queries)} consultas, {len(supports)} suportes, "
        f"{index.pair_count} pares (R={radius})"
    )
    return index


def brute_force_radius_search(queries, supports, radius: float) -> NeighborhoodIndex:
    """
    Oráculo ingênuo O(Q·S) com a mesma semântica de radius_search

    Args:
        queries: Pontos de consulta (Q, 3)
        supports: Pontos de suporte (S, 3)
        radius: Raio da bola em metros

    Returns:
        NeighborhoodIndex equivalente
    """
    queries, supports = _validate_search(queries, supports, radius)
    radius_sq = radius * radius

    query_parts, support_parts = [], []
    for i, query in enumerate(queries):
        d2 = _squared_distances(supports, np.broadcast_to(query, supports.shape))
        hits = np.nonzero(d2 < radius_sq)[0]
        query_parts.append(np.full(len(hits), i, dtype=np.int64))
        support_parts.append(hits.astype(np.int64))

    return NeighborhoodIndex.from_pairs(
        np.concatenate(query_parts),
        np.concatenate(support_parts),
        len(queries),
        radius,
        len(supports),
    )


def knn_search(queries, supports, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    k vizinhos mais próximos, ordenados por (distância, índice)

    Args:
        queries: Pontos de consulta (Q, 3)
        supports: Pontos de suporte (S, 3)
        k: Número de vizinhos (limitado a S)

    Returns:
        Tupla (índices (Q, k), distâncias (Q, k)); as distâncias são
        recalculadas a partir dos deslocamentos
    """
    queries = require_points(queries, "queries")
    supports = require_points(supports, "supports")
    if len(supports) == 0:
        raise ParameterError("Conjunto de suporte vazio")
    if k < 1:
        raise ParameterError(f"k deve ser >= 1: {k}")

    if k > len(supports):
        logger.warning(f"k={k} maior que {len(supports)} suportes; limitando")
        k = len(supports)

    _, indices = cKDTree(supports).query(queries, k=k)
    indices = np.asarray(indices, dtype=np.int64).reshape(len(queries), k)

    offsets = supports[indices] - queries[:, None, :]
    distances = np.sqrt(np.einsum("qkc,qkc->qk", offsets, offsets))

    order = np.lexsort((indices, distances), axis=1)
    rows = np.arange(len(queries))[:, None]
    return indices[rows, order], distances[rows, order]


def estimate_normals(cloud: PointCloud, k: int) -> Tuple[PointCloud, np.ndarray]:
    """
    Estima normais pelo menor autovetor da covariância dos k vizinhos

    Args:
        cloud: Nuvem de entrada com pelo menos k + 1 pontos
        k: Número de vizinhos (além do próprio ponto)

    Returns:
        Tupla (nuvem com normais, máscara de pontos degenerados). Pontos com
        covariância de posto < 2 recebem normal +z e são sinalizados.
    """
    if k < 2:
        raise ParameterError(f"k deve ser >= 2: {k}")
    if len(cloud) < k + 1:
        raise ParameterError(f"Nuvem precisa de pelo menos {k + 1} pontos")

    indices, _ = knn_search(cloud.positions, cloud.positions, k + 1)
    neighborhoods = cloud.positions[indices]
    centered = neighborhoods - neighborhoods.mean(axis=1, keepdims=True)
    covariances = np.einsum("nki,nkj->nij", centered, centered) / (k + 1)

    eigenvalues, eigenvectors = np.linalg.eigh(covariances)
    normals = eigenvectors[:, :, 0].copy()

    # Posto < 2: segundo maior autovalor desprezível frente ao maior
    scale = np.maximum(eigenvalues[:, 2], np.finfo(np.float64).tiny)
    degenerate = eigenvalues[:, 1] <= 1e-12 * scale

    flip = normals[:, 2] < 0
    normals[flip] *= -1.0
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    normals[degenerate] = (0.0, 0.0, 1.0)

    if degenerate.any():
        logger.warning(f"{int(degenerate.sum())} normais degeneradas definidas como +z")

    result = PointCloud(
        positions=cloud.positions,
        colors=cloud.colors,
        normals=normals,
        features=cloud.features,
        labels=cloud.labels,
    )
    return result, degenerate
