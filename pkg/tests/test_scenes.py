"""
Testes unitários para as cenas sintéticas e o aumento de dados
"""

import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.data.scenes import (
    CLASS_IDS,
    SyntheticSceneSpec,
    augment,
    generate_dataset,
    generate_scene,
    load_dataset,
    synthetic_dataset,
)
from src.utils.validators import InputError, ParameterError


class TestGenerateScene(unittest.TestCase):
    """Testes para generate_scene"""

    def setUp(self):
        self.spec = SyntheticSceneSpec(points_per_primitive=200, noise=0.0, seed=5)

    def test_label_counts(self):
        """Testa pontos por classe"""
        cloud = generate_scene(self.spec)
        counts = np.bincount(cloud.labels, minlength=3)
        np.testing.assert_array_equal(counts, [400, 400, 400])
        self.assertEqual(len(cloud), 1200)

    def test_deterministic(self):
        """Testa mesma cena para a mesma semente"""
        first = generate_scene(self.spec)
        second = generate_scene(self.spec)
        np.testing.assert_array_equal(first.positions, second.positions)
        np.testing.assert_array_equal(first.colors, second.colors)

        other = generate_scene(SyntheticSceneSpec(points_per_primitive=200, noise=0.0, seed=6))
        self.assertFalse(np.array_equal(first.positions, other.positions))

    def test_plane_points_exact(self):
        """Testa pontos de plano exatamente sobre o plano sem ruído"""
        cloud, primitives = generate_scene(self.spec, return_primitives=True)
        planes = [p for p in primitives if p["kind"] == "plane"]
        plane_points = cloud.positions[cloud.labels == CLASS_IDS["plane"]]

        first = plane_points[:200]
        self.assertTrue(np.all(first[:, planes[0]["axis"]] == planes[0]["offset"]))

    def test_sphere_radius(self):
        """Testa pontos de esfera à distância do raio"""
        cloud, primitives = generate_scene(self.spec, return_primitives=True)
        sphere = [p for p in primitives if p["kind"] == "sphere"][0]
        points = cloud.positions[cloud.labels == CLASS_IDS["sphere"]][:200]

        distances = np.linalg.norm(points - sphere["center"], axis=1)
        np.testing.assert_allclose(distances, sphere["radius"], rtol=1e-12)

    def test_box_points_on_surface(self):
        """Testa pontos de caixa sobre alguma face"""
        cloud, primitives = generate_scene(self.spec, return_primitives=True)
        box = [p for p in primitives if p["kind"] == "box"][0]
        local = np.abs(cloud.positions[cloud.labels == CLASS_IDS["box"]][:200] - box["center"])

        on_face = np.isclose(local, box["half"], rtol=1e-12, atol=1e-12).any(axis=1)
        self.assertTrue(on_face.all())
        self.assertTrue(np.all(local <= box["half"] + 1e-12))

    def test_unit_normals_and_colors(self):
        """Testa normais unitárias e cores em [0, 1]"""
        cloud = generate_scene(SyntheticSceneSpec(points_per_primitive=50, seed=1))
        np.testing.assert_allclose(np.linalg.norm(cloud.normals, axis=1), 1.0)
        self.assertTrue(np.all((cloud.colors >= 0) & (cloud.colors <= 1)))

    def test_invalid_primitives(self):
        """Testa primitivas desconhecidas ou ausentes"""
        with self.assertRaises(ParameterError):
            generate_scene(SyntheticSceneSpec(primitives={"cone": 1}))
        with self.assertRaises(ParameterError):
            generate_scene(SyntheticSceneSpec(primitives={"plane": 0}))


class TestDatasets(unittest.TestCase):
    """Testes para conjuntos em memória e em disco"""

    def test_synthetic_dataset_seeds(self):
        """Testa nomes e sementes consecutivas"""
        scenes = synthetic_dataset(3, 10, points_per_primitive=20)
        self.assertEqual([s.name for s in scenes], ["scene_000", "scene_001", "scene_002"])
        self.assertEqual([s.seed for s in scenes], [10, 11, 12])

    def test_generate_and_load(self):
        """Testa gravação em disco e releitura pelo manifesto"""
        with tempfile.TemporaryDirectory() as temp_dir:
            manifest = generate_dataset(temp_dir, 2, 3, points_per_primitive=20)
            self.assertEqual(manifest.name, "manifest.txt")

            scenes = load_dataset(temp_dir)
            expected = synthetic_dataset(2, 3, points_per_primitive=20)

            self.assertEqual([s.seed for s in scenes], [3, 4])
            for loaded, original in zip(scenes, expected):
                np.testing.assert_array_equal(loaded.cloud.labels, original.cloud.labels)
                np.testing.assert_allclose(
                    loaded.cloud.positions, original.cloud.positions, atol=1e-6
                )

    def test_generate_deterministic_bytes(self):
        """Testa arquivos idênticos para a mesma semente"""
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            generate_dataset(a, 1, 9, points_per_primitive=15)
            generate_dataset(b, 1, 9, points_per_primitive=15)
            self.assertEqual(
                (Path(a) / "scene_000.ply").read_bytes(), (Path(b) / "scene_000.ply").read_bytes()
            )

    def test_load_without_manifest(self):
        """Testa leitura de *.ply em ordem lexicográfica"""
        with tempfile.TemporaryDirectory() as temp_dir:
            generate_dataset(temp_dir, 2, 0, points_per_primitive=10)
            (Path(temp_dir) / "manifest.txt").unlink()
            scenes = load_dataset(temp_dir)
            self.assertEqual([s.name for s in scenes], ["scene_000", "scene_001"])
            self.assertIsNone(scenes[0].seed)

    def test_empty_directory(self):
        """Testa diretório sem cenas"""
        with tempfile.TemporaryDirectory() as temp_dir:
            with self.assertRaises(InputError):
                load_dataset(temp_dir)


class TestAugment(unittest.TestCase):
    """Testes para o aumento de dados"""

    def setUp(self):
        self.cloud = generate_scene(SyntheticSceneSpec(points_per_primitive=30, seed=2))

    def test_rotation_preserves_geometry(self):
        """Testa rotação em z preservando alturas e normas das normais"""
        rotated = augment(self.cloud, np.random.default_rng(0), rotation=True)
        np.testing.assert_allclose(rotated.positions[:, 2], self.cloud.positions[:, 2])
        np.testing.assert_allclose(
            np.linalg.norm(rotated.positions[:, :2], axis=1),
            np.linalg.norm(self.cloud.positions[:, :2], axis=1),
        )
        np.testing.assert_array_equal(rotated.labels, self.cloud.labels)

    def test_no_augmentation_is_identity(self):
        """Testa cópia sem alterações"""
        same = augment(self.cloud, np.random.default_rng(0))
        np.testing.assert_array_equal(same.positions, self.cloud.positions)


if __name__ == "__main__":
    unittest.main(verbosity=2)
