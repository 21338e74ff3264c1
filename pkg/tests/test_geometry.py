"""
Testes unitários para PointCloud, busca por raio, kNN e normais
"""

import unittest

import numpy as np

from src.core.geometry import (
    PointCloud,
    brute_force_radius_search,
    estimate_normals,
    knn_search,
    radius_search,
)
from src.utils.validators import InputError, ParameterError, ShapeError


def _unit(rng, count):
    normals = rng.normal(size=(count, 3))
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


class TestPointCloud(unittest.TestCase):
    """Testes para a validação da PointCloud"""

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_valid_cloud(self):
        """Testa nuvem completa"""
        cloud = PointCloud(
            positions=self.rng.uniform(size=(10, 3)),
            colors=self.rng.uniform(size=(10, 3)),
            normals=_unit(self.rng, 10),
            labels=np.arange(10) % 3,
        )

        self.assertEqual(len(cloud), 10)
        self.assertEqual(cloud.features.shape, (10, 0))
        self.assertEqual(cloud.labels.dtype, np.int64)
        self.assertEqual(cloud.missing_attributes(), [])

    def test_non_finite_positions(self):
        """Testa rejeição de coordenadas não finitas"""
        positions = np.zeros((3, 3))
        positions[1, 2] = np.nan
        with self.assertRaises(InputError):
            PointCloud(positions=positions)

    def test_non_unit_normals(self):
        """Testa rejeição de normais não unitárias"""
        with self.assertRaises(InputError):
            PointCloud(positions=np.zeros((2, 3)), normals=np.ones((2, 3)))

    def test_shape_mismatch(self):
        """Testa atributos com número de linhas diferente"""
        with self.assertRaises(ShapeError):
            PointCloud(positions=np.zeros((4, 3)), colors=np.zeros((3, 3)))
        with self.assertRaises(ShapeError):
            PointCloud(positions=np.zeros((4, 2)))

    def test_missing_attributes(self):
        """Testa relatório de atributos ausentes"""
        cloud = PointCloud(positions=np.zeros((2, 3)), colors=np.zeros((2, 3)))
        self.assertEqual(cloud.missing_attributes(), ["normals"])

    def test_subset_and_translation(self):
        """Testa subconjunto e translação preservando atributos"""
        cloud = PointCloud(
            positions=np.arange(12, dtype=float).reshape(4, 3),
            labels=np.array([0, 1, 2, 1]),
        )
        subset = cloud.subset([3, 1])
        np.testing.assert_array_equal(subset.labels, [1, 1])
        np.testing.assert_array_equal(subset.positions[0], [9.0, 10.0, 11.0])

        moved = cloud.translated([1.0, 0.0, -1.0])
        np.testing.assert_array_equal(moved.positions[0], [1.0, 1.0, 1.0])
        np.testing.assert_array_equal(moved.labels, cloud.labels)


class TestRadiusSearch(unittest.TestCase):
    """Testes para a busca por raio"""

    def setUp(self):
        self.rng = np.random.default_rng(11)
        self.supports = self.rng.uniform(0.0, 1.0, size=(300, 3))
        self.queries = self.rng.uniform(-0.1, 1.1, size=(80, 3))

    def test_matches_brute_force(self):
        """Testa equivalência com o oráculo ingênuo"""
        for radius in (0.05, 0.2, 0.7):
            fast = radius_search(self.queries, self.supports, radius)
            slow = brute_force_radius_search(self.queries, self.supports, radius)
            np.testing.assert_array_equal(fast.offsets, slow.offsets)
            np.testing.assert_array_equal(fast.indices, slow.indices)

    def test_sorted_neighbor_lists(self):
        """Testa listas de vizinhos em ordem crescente"""
        index = radius_search(self.queries, self.supports, 0.3)
        for neighbors in index.neighbor_lists:
            self.assertTrue(np.all(np.diff(neighbors) > 0))

    def test_open_ball(self):
        """Testa que a fronteira do raio fica de fora"""
        supports = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.25, 0.0, 0.0]])
        index = radius_search(np.zeros((1, 3)), supports, 0.5)
        np.testing.assert_array_equal(index.neighbor_lists[0], [0, 2])

    def test_self_search_contains_self(self):
        """Testa que cada ponto é vizinho de si mesmo"""
        index = radius_search(self.supports, self.supports, 0.1)
        for i, neighbors in enumerate(index.neighbor_lists):
            self.assertIn(i, neighbors)

    def test_invalid_radius(self):
        """Testa raio inválido"""
        with self.assertRaises(ParameterError):
            radius_search(self.queries, self.supports, 0.0)
        with self.assertRaises(ParameterError):
            radius_search(self.queries, self.supports, float("nan"))


class TestKnnAndNormals(unittest.TestCase):
    """Testes para kNN e estimativa de normais"""

    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_knn_matches_sorted_distances(self):
        """Testa kNN contra ordenação completa"""
        supports = self.rng.uniform(size=(100, 3))
        queries = self.rng.uniform(size=(20, 3))
        indices, distances = knn_search(queries, supports, 4)

        for q in range(len(queries)):
            full = np.linalg.norm(supports - queries[q], axis=1)
            np.testing.assert_array_equal(indices[q], np.argsort(full)[:4])
            np.testing.assert_allclose(distances[q], np.sort(full)[:4], rtol=1e-12)

    def test_knn_clamps_k(self):
        """Testa k maior que o número de suportes"""
        indices, _ = knn_search(np.zeros((2, 3)), np.eye(3), 5)
        self.assertEqual(indices.shape, (2, 3))

    def test_plane_normals(self):
        """Testa normais de um plano z = 0"""
        positions = np.zeros((200, 3))
        positions[:, :2] = self.rng.uniform(size=(200, 2))
        cloud, degenerate = estimate_normals(PointCloud(positions=positions), 8)

        self.assertFalse(degenerate.any())
        np.testing.assert_allclose(cloud.normals, np.tile([0.0, 0.0, 1.0], (200, 1)), atol=1e-9)

    def test_collinear_points_flagged(self):
        """Testa sinalização de vizinhanças degeneradas"""
        positions = np.zeros((20, 3))
        positions[:, 0] = np.linspace(0.0, 1.0, 20)
        cloud, degenerate = estimate_normals(PointCloud(positions=positions), 4)

        self.assertTrue(degenerate.all())
        np.testing.assert_array_equal(cloud.normals[0], [0.0, 0.0, 1.0])


if __name__ == "__main__":
    unittest.main(verbosity=2)
