import unittest

import numpy as np

from apparelmotion.nn.exceptions import ShapeMismatchException, UnknownParameterException
from apparelmotion.nn.layers import MLP, Linear
from apparelmotion.nn.parameters import MOMENT1_PREFIX, ParameterStore


class TestParameterStore(unittest.TestCase):
    def test_state_arrays_restore_values_and_moments(self):
        rng = np.random.default_rng(0)
        store = ParameterStore()
        Linear(store, "layer", 3, 2, rng)
        store["layer.weight"].moment1[...] = 0.5
        arrays = store.state_arrays(prefix="net.")
        self.assertIn(MOMENT1_PREFIX + "net.layer.weight", arrays)

        restored = ParameterStore()
        Linear(restored, "layer", 3, 2, np.random.default_rng(1))
        restored.load_state_arrays(arrays, prefix="net.", step=7)
        np.testing.assert_array_equal(restored["layer.weight"].value, store["layer.weight"].value)
        np.testing.assert_array_equal(restored["layer.weight"].moment1, np.full((3, 2), 0.5))
        self.assertEqual(restored.step, 7)
        self.assertTrue(restored.trained)

    def test_missing_parameter_raises(self):
        store = ParameterStore()
        store.add("w", np.zeros(2))
        with self.assertRaises(UnknownParameterException):
            store.load_state_arrays({})

    def test_shape_mismatch_raises(self):
        store = ParameterStore()
        store.add("w", np.zeros(2))
        with self.assertRaises(ShapeMismatchException):
            store.load_state_arrays({"w": np.zeros(3)})

    def test_zero_grad(self):
        store = ParameterStore()
        parameter = store.add("w", np.zeros(2))
        parameter.grad = np.ones(2)
        store.zero_grad()
        np.testing.assert_array_equal(parameter.grad, np.zeros(2))


class TestMLP(unittest.TestCase):
    def test_shapes_and_parameter_names(self):
        store = ParameterStore()
        mlp = MLP(store, "mlp", (3, 8, 2), np.random.default_rng(0))
        self.assertEqual(mlp(np.ones((5, 3))).shape, (5, 2))
        self.assertEqual(
            store.names(), ("mlp.0.weight", "mlp.0.bias", "mlp.1.weight", "mlp.1.bias")
        )

    def test_activate_last_is_non_negative(self):
        mlp = MLP(ParameterStore(), "mlp", (3, 4), np.random.default_rng(0), activate_last=True)
        out = mlp(np.random.default_rng(1).normal(size=(10, 3)))
        self.assertTrue(np.all(out.value >= 0.0))

    def test_wrong_input_width_raises(self):
        mlp = MLP(ParameterStore(), "mlp", (3, 4), np.random.default_rng(0))
        with self.assertRaises(ShapeMismatchException):
            mlp(np.ones((2, 4)))

    def test_needs_two_widths(self):
        with self.assertRaises(ShapeMismatchException):
            MLP(ParameterStore(), "mlp", (3,), np.random.default_rng(0))
