"""
Testes unitários para a amostragem Poisson disk e por grade
"""

import unittest

import numpy as np

from src.core.geometry import PointCloud, brute_force_radius_search
from src.core.sampling import canonical_order, cloud_order, grid_sample, poisson_disk_sample
from src.utils.validators import ParameterError


class TestPoissonDisk(unittest.TestCase):
    """Testes para poisson_disk_sample"""

    def setUp(self):
        rng = np.random.default_rng(21)
        self.cloud = PointCloud(positions=rng.uniform(0.0, 1.0, size=(600, 3)))
        self.radius = 0.12

    def test_minimum_distance(self):
        """Testa distância mínima entre pontos aceitos"""
        chosen = self.cloud.positions[poisson_disk_sample(self.cloud, self.radius, 0)]
        diff = chosen[:, None, :] - chosen[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        self.assertGreaterEqual(dist.min(), self.radius)

    def test_maximal(self):
        """Testa que todo ponto rejeitado tem um aceito a menos de r_p"""
        indices = poisson_disk_sample(self.cloud, self.radius, 0)
        rejected = np.setdiff1d(np.arange(len(self.cloud)), indices)
        index = brute_force_radius_search(
            self.cloud.positions[rejected], self.cloud.positions[indices], self.radius
        )
        self.assertTrue(np.all(index.counts > 0))

    def test_deterministic(self):
        """Testa determinismo para a mesma semente"""
        first = poisson_disk_sample(self.cloud, self.radius, 4)
        second = poisson_disk_sample(self.cloud, self.radius, 4)
        np.testing.assert_array_equal(first, second)

    def test_input_order_independent(self):
        """Testa que a ordem de entrada não muda o conjunto aceito"""
        permutation = np.random.default_rng(8).permutation(len(self.cloud))
        shuffled = self.cloud.subset(permutation)

        original = self.cloud.positions[poisson_disk_sample(self.cloud, self.radius, 2)]
        other = shuffled.positions[poisson_disk_sample(shuffled, self.radius, 2)]

        np.testing.assert_array_equal(
            original[canonical_order(original)], other[canonical_order(other)]
        )

    def test_coincident_points_keep_same_representative(self):
        """Testa o mesmo representante de pontos coincidentes em qualquer ordem"""
        positions = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        colors = np.array([[0.9, 0.0, 0.0], [0.1, 0.0, 0.0], [0.5, 0.5, 0.5]])
        cloud = PointCloud(positions=positions, colors=colors)

        kept = cloud.colors[poisson_disk_sample(cloud, 0.5, 0)]
        for permutation in ([1, 0, 2], [2, 1, 0], [0, 2, 1]):
            shuffled = cloud.subset(np.array(permutation))
            other = shuffled.colors[poisson_disk_sample(shuffled, 0.5, 0)]
            self.assertEqual(
                sorted(map(tuple, other.tolist())), sorted(map(tuple, kept.tolist()))
            )

    def test_single_point(self):
        """Testa nuvem de um ponto"""
        cloud = PointCloud(positions=np.ones((1, 3)))
        np.testing.assert_array_equal(poisson_disk_sample(cloud, 0.5, 0), [0])

    def test_invalid_radius(self):
        """Testa raio inválido"""
        with self.assertRaises(ParameterError):
            poisson_disk_sample(self.cloud, 0.0, 0)


class TestCanonicalOrder(unittest.TestCase):
    """Testes para a ordem canônica"""

    def test_lexicographic(self):
        """Testa ordem por x, depois y, depois z"""
        positions = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_array_equal(canonical_order(positions), [2, 1, 0])

    def test_ties_broken_by_attributes(self):
        """Testa desempate de posições iguais pelas cores e normais"""
        positions = np.zeros((3, 3))
        colors = np.array([[0.5, 0.0, 0.0], [0.2, 0.0, 0.0], [0.2, 0.0, 0.0]])
        normals = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        np.testing.assert_array_equal(canonical_order(positions, colors, normals), [2, 1, 0])

    def test_cloud_order_independent_of_input_order(self):
        """Testa a mesma sequência de pontos para entradas permutadas"""
        rng = np.random.default_rng(5)
        positions = np.repeat(rng.uniform(size=(4, 3)), 2, axis=0)
        cloud = PointCloud(positions=positions, colors=rng.uniform(size=(8, 3)))
        shuffled = cloud.subset(rng.permutation(8))

        np.testing.assert_array_equal(
            cloud.colors[cloud_order(cloud)], shuffled.colors[cloud_order(shuffled)]
        )


class TestGridSample(unittest.TestCase):
    """Testes para grid_sample"""

    def test_cell_barycenters(self):
        """Testa um ponto por célula no baricentro"""
        positions = np.array(
            [
                [0.1, 0.1, 0.1],
                [0.3, 0.3, 0.3],
                [1.2, 0.1, 0.1],
            ]
        )
        normals = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        cloud = PointCloud(positions=positions, normals=normals, colors=np.zeros((3, 3)))
        sampled = grid_sample(cloud, 1.0)

        self.assertEqual(len(sampled), 2)
        np.testing.assert_allclose(sampled.positions[0], [0.2, 0.2, 0.2])
        np.testing.assert_allclose(sampled.positions[1], [1.2, 0.1, 0.1])
        np.testing.assert_allclose(np.linalg.norm(sampled.normals, axis=1), 1.0)
        self.assertIsNone(sampled.labels)

    def test_cancelling_normals(self):
        """Testa normal média nula substituída por +z"""
        positions = np.array([[0.1, 0.1, 0.1], [0.2, 0.2, 0.2]])
        normals = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        sampled = grid_sample(PointCloud(positions=positions, normals=normals), 1.0)
        np.testing.assert_array_equal(sampled.normals[0], [0.0, 0.0, 1.0])

    def test_invalid_cell(self):
        """Testa célula inválida"""
        with self.assertRaises(ParameterError):
            grid_sample(PointCloud(positions=np.zeros((2, 3))), -1.0)


if __name__ == "__main__":
    unittest.main(verbosity=2)
