"""
Cenas sintéticas rotuladas (planos, esferas e caixas), leitura de conjuntos
em disco e aumento de dados
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from config.settings import SCENE_CONFIG
from ..core.geometry import PointCloud
from ..core.ply_parser import PLYParser
from ..utils.file_handler import FileHandler
from ..utils.validators import InputError, ParameterError

logger = logging.getLogger(__name__)

CLASS_IDS = {"plane": 0, "sphere": 1, "box": 2}
MANIFEST_NAME = "manifest.txt"


@dataclass
class SyntheticSceneSpec:
    """
    Parâmetros de uma cena sintética

    Attributes:
        primitives: Quantidade de cada primitiva (plane, sphere, box)
        points_per_primitive: Pontos amostrados em cada primitiva
        noise: Desvio do ruído gaussiano de posição (metros)
        bounds: Lado da região onde as primitivas são posicionadas
        seed: Semente da cena
    """

    primitives: Dict[str, int] = field(
        default_factory=lambda: dict(SCENE_CONFIG["primitives"])
    )
    points_per_primitive: int = 1350
    noise: float = 0.002
    bounds: float = SCENE_CONFIG["bounds"]
    seed: int = 0


@dataclass
class Scene:
    """Nuvem rotulada com nome e semente de origem"""

    name: str
    cloud: PointCloud
    seed: Optional[int] = None


def _unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    vectors = rng.normal(size=(count, 3))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def _sample_plane(rng, count, half_bounds):
    axis = int(rng.integers(3))
    others = [a for a in range(3) if a != axis]
    center = rng.uniform(-half_bounds * 0.5, half_bounds * 0.5, size=3)
    half_size = rng.uniform(0.3, 0.5, size=2)

    points = np.empty((count, 3))
    points[:, axis] = center[axis]
    for i, a in enumerate(others):
        points[:, a] = center[a] + rng.uniform(-half_size[i], half_size[i], size=count)

    normals = np.zeros((count, 3))
    normals[:, axis] = 1.0
    return points, normals, {"axis": axis, "offset": float(center[axis])}


def _sample_sphere(rng, count, half_bounds):
    center = rng.uniform(-half_bounds * 0.6, half_bounds * 0.6, size=3)
    radius = float(rng.uniform(0.15, 0.35))
    normals = _unit_vectors(rng, count)
    return center + radius * normals, normals, {"center": center, "radius": radius}


def _sample_box(rng, count, half_bounds):
    center = rng.uniform(-half_bounds * 0.6, half_bounds * 0.6, size=3)
    half = rng.uniform(0.1, 0.3, size=3)

    # Faces escolhidas com probabilidade proporcional à área
    areas = np.array([half[1] * half[2], half[0] * half[2], half[0] * half[1]])
    face_prob = np.repeat(areas, 2) / (2 * areas.sum())
    faces = rng.choice(6, size=count, p=face_prob)

    local = rng.uniform(-1.0, 1.0, size=(count, 3)) * half
    axis = faces // 2
    sign = np.where(faces % 2 == 0, 1.0, -1.0)
    rows = np.arange(count)
    local[rows, axis] = sign * half[axis]

    normals = np.zeros((count, 3))
    normals[rows, axis] = sign
    return center + local, normals, {"center": center, "half": half}


_SAMPLERS = {"plane": _sample_plane, "sphere": _sample_sphere, "box": _sample_box}


def generate_scene(spec: SyntheticSceneSpec, return_primitives: bool = False):
    """
    Gera uma cena rotulada

    Cada ponto recebe a classe da primitiva de origem, a cor base da
    primitiva (paleta semeada) com ruído por ponto e a normal analítica da
    superfície.

    Args:
        spec: Parâmetros da cena
        return_primitives: Também devolve a descrição de cada primitiva

    Returns:
        PointCloud rotulada (e, opcionalmente, a lista de primitivas)
    """
    unknown = set(spec.primitives) - set(_SAMPLERS)
    if unknown:
        raise ParameterError(f"Primitivas desconhecidas: {sorted(unknown)}")
    if sum(spec.primitives.values()) < 1:
        raise ParameterError("A cena precisa de pelo menos uma primitiva")
    if spec.points_per_primitive < 1:
        raise ParameterError(f"points_per_primitive deve ser >= 1: {spec.points_per_primitive}")
    if spec.noise < 0:
        raise ParameterError(f"noise deve ser >= 0: {spec.noise}")

    rng = np.random.default_rng(spec.seed)
    half_bounds = spec.bounds / 2.0
    count = spec.points_per_primitive

    positions, normals, colors, labels, described = [], [], [], [], []
    for kind in ("plane", "sphere", "box"):
        for _ in range(spec.primitives.get(kind, 0)):
            points, surface_normals, info = _SAMPLERS[kind](rng, count, half_bounds)
            base_color = rng.uniform(0.2, 0.9, size=3)
            jitter = rng.normal(scale=SCENE_CONFIG["color_jitter"], size=(count, 3))

            if spec.noise > 0:
                points = points + rng.normal(scale=spec.noise, size=points.shape)

            positions.append(points)
            normals.append(surface_normals)
            colors.append(np.clip(base_color + jitter, 0.0, 1.0))
            labels.append(np.full(count, CLASS_IDS[kind], dtype=np.int64))
            described.append({"kind": kind, **info})

    cloud = PointCloud(
        positions=np.concatenate(positions),
        colors=np.concatenate(colors),
        normals=np.concatenate(normals),
        labels=np.concatenate(labels),
    )
    logger.debug(f"Cena {spec.seed}: {len(described)} primitivas, {len(cloud)} pontos")
    return (cloud, described) if return_primitives else cloud


def synthetic_dataset(
    count: int,
    seed: int,
    points_per_primitive: int = 1350,
    noise: float = 0.002,
    primitives: Optional[Dict[str, int]] = None,
) -> List[Scene]:
    """
    Conjunto de cenas sintéticas em memória (semente da cena i = seed + i)
    """
    scenes = []
    for i in range(count):
        spec = SyntheticSceneSpec(
            primitives=dict(primitives or SCENE_CONFIG["primitives"]),
            points_per_primitive=points_per_primitive,
            noise=noise,
            seed=seed + i,
        )
        scenes.append(Scene(f"scene_{i:03d}", generate_scene(spec), seed + i))
    return scenes


def generate_dataset(
    out_dir: Union[str, Path],
    count: int,
    seed: int,
    points_per_primitive: int = 1350,
    noise: float = 0.002,
    binary: bool = True,
) -> Path:
    """
    Escreve um conjunto sintético em disco: um PLY por cena e um manifesto

    Args:
        out_dir: Diretório de saída
        count: Número de cenas
        seed: Semente base
        points_per_primitive: Pontos por primitiva
        noise: Ruído de posição
        binary: PLY binário (True) ou ascii

    Returns:
        Caminho do manifesto
    """
    if count < 1:
        raise ParameterError(f"count deve ser >= 1: {count}")

    handler = FileHandler()
    parser = PLYParser()
    out = handler.create_directory(out_dir)

    lines = ["# arquivo\tsemente"]
    for scene in synthetic_dataset(count, seed, points_per_primitive, noise):
        file_name = f"{scene.name}.ply"
        parser.write(scene.cloud, out / file_name, binary=binary)
        lines.append(f"{file_name}\t{scene.seed}")

    manifest = handler.write_text_atomic("\n".join(lines) + "\n", out / MANIFEST_NAME)
    logger.info(f"{count} cenas sintéticas geradas em {out}")
    return manifest


def load_dataset(directory: Union[str, Path]) -> List[Scene]:
    """
    Lê um conjunto de cenas PLY

    Usa o manifesto quando existir; caso contrário todos os *.ply do
    diretório, em ordem lexicográfica.

    Args:
        directory: Diretório do conjunto

    Returns:
        Lista de cenas
    """
    handler = FileHandler()
    parser = PLYParser()
    root = Path(directory)
    manifest = root / MANIFEST_NAME

    entries = []
    if handler.validate_file_exists(manifest):
        for line in handler.read_file(manifest).splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            seed = int(parts[1]) if len(parts) > 1 and parts[1].strip() else None
            entries.append((root / parts[0], seed))
    else:
        entries = [(path, None) for path in handler.list_files(root, "*.ply")]

    if not entries:
        raise InputError(f"Nenhuma cena encontrada em {root}")

    scenes = [Scene(path.stem, parser.read(path), seed) for path, seed in entries]
    logger.info(f"{len(scenes)} cenas carregadas de {root}")
    return scenes


def augment(
    cloud: PointCloud,
    rng: np.random.Generator,
    rotation: bool = False,
    jitter: bool = False,
    sigma: float = 0.005,
) -> PointCloud:
    """
    Rotação aleatória em torno de z e/ou ruído gaussiano nas posições

    Args:
        cloud: Nuvem original
        rng: Gerador semeado
        rotation: Aplica rotação em torno de z
        jitter: Aplica ruído de posição
        sigma: Desvio do ruído

    Returns:
        Nova nuvem (normais rotacionadas junto com as posições)
    """
    positions, normals = cloud.positions, cloud.normals
    if rotation:
        angle = rng.uniform(0.0, 2.0 * np.pi)
        c, s = np.cos(angle), np.sin(angle)
        matrix = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        positions = positions @ matrix.T
        if normals is not None:
            normals = normals @ matrix.T
            normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    if jitter:
        positions = positions + rng.normal(scale=sigma, size=positions.shape)

    return PointCloud(
        positions=positions,
        colors=cloud.colors,
        normals=normals,
        features=cloud.features,
        labels=cloud.labels,
    )
