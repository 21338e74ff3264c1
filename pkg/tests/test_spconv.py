"""
Testes unitários para o operador SPConv
"""

import unittest

import numpy as np

from src.core.geometry import radius_search
from src.core.kernel_layout import build_layout, correlation
from src.core.spconv import (
    ConvNeighborhood,
    SPConv,
    SPConvParams,
    aggregate,
    shell_conv_backward,
    shell_conv_forward,
)
from src.training.gradcheck import check_case, GradcheckCase
from src.core.layers import Parameter
from src.utils.validators import ParameterError, ShapeError, StateError


def _leaky(x):
    return x if x > 0 else 0.1 * x


def reference_spconv(queries, supports, features, layout, W1, W2, radius):
    """Avaliação escalar direta, laço por laço"""
    K, C_in, H = W1.shape
    N, _, C_out = W2.shape
    bounds = np.concatenate([[0], np.cumsum(layout.shell_sizes)])
    out = np.zeros((len(queries), C_out))

    for q, query in enumerate(queries):
        agg = np.zeros((K, C_in))
        for s, support in enumerate(supports):
            offset = support - query
            if np.dot(offset, offset) >= radius * radius:
                continue
            for k in range(K):
                agg[k] += correlation(layout.points[k], offset, layout.influence) * features[s]

        hidden = np.zeros((N, H))
        for n in range(N):
            for h in range(H):
                total = 0.0
                for k in range(bounds[n], bounds[n + 1]):
                    for c in range(C_in):
                        total += agg[k, c] * W1[k, c, h]
                hidden[n, h] = _leaky(total)

        for o in range(C_out):
            total = 0.0
            for n in range(N):
                for h in range(H):
                    total += hidden[n, h] * W2[n, h, o]
            out[q, o] = _leaky(total)
    return out


class TestAggregate(unittest.TestCase):
    """Testes para a agregação por ponto de kernel"""

    def setUp(self):
        self.layout = build_layout(2, 6, (1.0,), 1.0, 1, use_cache=False)
        self.rng = np.random.default_rng(0)

    def test_matches_double_loop(self):
        """Testa agregação contra laço duplo"""
        offsets = self.rng.uniform(-1.5, 1.5, size=(12, 3))
        features = self.rng.standard_normal((12, 4))
        result = aggregate(self.layout, offsets, features)

        expected = np.zeros((self.layout.total_kernel_count, 4))
        for k in range(self.layout.total_kernel_count):
            for m in range(len(offsets)):
                expected[k] += correlation(self.layout.points[k], offsets[m], 1.0) * features[m]
        np.testing.assert_allclose(result, expected, rtol=1e-12, atol=1e-12)

    def test_far_neighbors_give_zero(self):
        """Testa vizinhos fora de toda influência"""
        offsets = np.full((3, 3), 10.0)
        result = aggregate(self.layout, offsets, np.ones((3, 2)))
        np.testing.assert_array_equal(result, 0.0)

    def test_shape_mismatch(self):
        """Testa número de features diferente do de deslocamentos"""
        with self.assertRaises(ShapeError):
            aggregate(self.layout, np.zeros((3, 3)), np.ones((2, 2)))


class TestShellConv(unittest.TestCase):
    """Testes para a convolução por casca e a fusão"""

    def setUp(self):
        self.rng = np.random.default_rng(2)
        self.layout = build_layout(3, 6, (0.75, 1.5), 0.5, 9, use_cache=False)
        self.params = SPConvParams.create("conv", self.layout, 3, 8, self.rng, np.float64)

    def test_single_and_batched(self):
        """Testa que a entrada única coincide com a linha do lote"""
        agg = self.rng.standard_normal((4, self.layout.total_kernel_count, 3))
        batched, _ = shell_conv_forward(agg, self.params, self.layout)
        single, _ = shell_conv_forward(agg[2], self.params, self.layout)

        self.assertEqual(batched.shape, (4, 8))
        np.testing.assert_allclose(single, batched[2], rtol=1e-12)

    def test_zero_output_gradient(self):
        """Testa gradientes nulos para dL/dsaída = 0"""
        agg = self.rng.standard_normal((5, self.layout.total_kernel_count, 3))
        out, cache = shell_conv_forward(agg, self.params, self.layout)
        grads = shell_conv_backward(np.zeros_like(out), cache)

        for key in ("W1", "W2", "agg"):
            np.testing.assert_array_equal(grads[key], 0.0)

    def test_backward_matches_finite_differences(self):
        """Testa backward analítico contra diferenças centrais"""
        agg = Parameter("agg", self.rng.standard_normal((5, self.layout.total_kernel_count, 3)))
        state = {}

        def forward():
            out, state["cache"] = shell_conv_forward(agg.value, self.params, self.layout)
            return out

        def backward(dout):
            grads = shell_conv_backward(dout, state["cache"])
            self.params.W1.grad += grads["W1"]
            self.params.W2.grad += grads["W2"]
            agg.grad += grads["agg"]

        case = GradcheckCase("shell", [self.params.W1, self.params.W2, agg], forward, backward)
        for result in check_case(case, seed=1, max_entries=10):
            self.assertTrue(result["passed"], result)

    def test_backward_without_cache(self):
        """Testa backward sem forward"""
        with self.assertRaises(StateError):
            shell_conv_backward(np.zeros(8), None)

    def test_odd_output_width(self):
        """Testa largura de saída ímpar"""
        with self.assertRaises(ParameterError):
            SPConvParams.create("conv", self.layout, 3, 7, self.rng)

    def test_layout_mismatch(self):
        """Testa pesos incompatíveis com a disposição"""
        other = build_layout(2, 6, (1.0,), 1.0, 9, use_cache=False)
        with self.assertRaises(ShapeError):
            shell_conv_forward(np.zeros((other.total_kernel_count, 3)), self.params, other)


class TestSPConvLayer(unittest.TestCase):
    """Testes para a camada SPConv completa"""

    def setUp(self):
        self.rng = np.random.default_rng(4)
        self.v = 0.25
        self.radius = 4 * self.v
        self.layout = build_layout(3, 8, (1.5 * self.v, 3 * self.v), self.v, 42, use_cache=False)
        self.conv = SPConv("conv", self.layout, 3, 6, self.rng, np.float64, batch_norm=False)

    def _neighborhood(self, queries, supports):
        return ConvNeighborhood(
            queries, supports, radius_search(queries, supports, self.radius), self.layout
        )

    def test_matches_scalar_reference(self):
        """Testa o forward contra a avaliação escalar em 20 instâncias"""
        for seed in range(20):
            rng = np.random.default_rng(seed)
            supports = rng.uniform(0.0, 1.5, size=(24, 3))
            queries = supports[::3]
            features = rng.standard_normal((24, 3))

            out = self.conv.forward(features, self._neighborhood(queries, supports))
            expected = reference_spconv(
                queries,
                supports,
                features,
                self.layout,
                self.conv.params.W1.value,
                self.conv.params.W2.value,
                self.radius,
            )
            np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12, err_msg=str(seed))

    def test_locality_backward(self):
        """Testa gradiente nulo para suportes além de r_N + v"""
        supports = self.rng.uniform(0.0, 1.0, size=(20, 3))
        far = np.vstack([supports, [[50.0, 50.0, 50.0], [-30.0, 2.0, 1.0]]])
        features = self.rng.standard_normal((22, 3))
        dout = self.rng.standard_normal((20, 6))

        self.conv.zero_grad()
        self.conv.forward(features[:20], self._neighborhood(supports, supports))
        d_near = self.conv.backward(dout)
        near_grads = [p.grad.copy() for p in self.conv.parameters()]

        far_features = features.copy()
        far_features[20:] = 1e6
        self.conv.zero_grad()
        self.conv.forward(far_features, self._neighborhood(supports, far))
        d_far = self.conv.backward(dout)

        np.testing.assert_array_equal(d_far[20:], 0.0)
        np.testing.assert_array_equal(d_far[:20], d_near)
        for expected, parameter in zip(near_grads, self.conv.parameters()):
            np.testing.assert_array_equal(parameter.grad, expected)

    def test_locality(self):
        """Testa que suportes distantes não afetam a saída"""
        supports = self.rng.uniform(0.0, 1.0, size=(20, 3))
        far = np.vstack([supports, [[50.0, 50.0, 50.0]]])
        features = self.rng.standard_normal((21, 3))

        near_out = self.conv.forward(features[:20], self._neighborhood(supports, supports))
        far_features = features.copy()
        far_features[20] = 1e6
        far_out = self.conv.forward(far_features, self._neighborhood(supports, far))

        np.testing.assert_array_equal(near_out, far_out)

    def test_translation_invariance(self):
        """Testa invariância exata a translações com coordenadas diádicas"""
        for seed in range(10):
            rng = np.random.default_rng(seed)
            supports = rng.integers(0, 1024, size=(40, 3)) * 2.0**-10
            features = rng.standard_normal((40, 3))
            shifted = supports + np.array([10.0, -6.0, 3.0])

            out = self.conv.forward(features, self._neighborhood(supports, supports))
            moved = self.conv.forward(features, self._neighborhood(shifted, shifted))
            np.testing.assert_array_equal(out, moved, err_msg=str(seed))

    def test_isolated_query(self):
        """Testa consulta sem vizinhos: agregação nula e saída nula"""
        supports = np.zeros((1, 3))
        queries = np.array([[0.0, 0.0, 0.0], [20.0, 0.0, 0.0]])
        out = self.conv.forward(np.ones((1, 3)), self._neighborhood(queries, supports))
        np.testing.assert_array_equal(out[1], 0.0)

    def test_feature_shape_checked(self):
        """Testa largura de features incorreta"""
        supports = np.zeros((2, 3))
        with self.assertRaises(ShapeError):
            self.conv.forward(np.ones((2, 5)), self._neighborhood(supports, supports))

    def test_backward_before_forward(self):
        """Testa backward sem forward"""
        fresh = SPConv("fresh", self.layout, 3, 6, self.rng, np.float64)
        with self.assertRaises(StateError):
            fresh.backward(np.zeros((1, 6)))


if __name__ == "__main__":
    unittest.main(verbosity=2)
