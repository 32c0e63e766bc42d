from unittest import TestCase

import numpy as np

from apparelmotion.core.config import RefineConfig
from apparelmotion.geometry.mesh import one_ring_mean_operator
from apparelmotion.models.exceptions import MissingVertexOrderException, UntrainedModelException
from apparelmotion.models.refine import RefineNetwork, VertexOrder, refine_losses
from apparelmotion.nn.exceptions import ShapeMismatchException
from tests.meshutil import tube_character
from tests.nnutil import NUM_SEEDS, TOLERANCE, max_gradient_error

SMALL_CONFIG = RefineConfig(widths=(6, 5))


class TestVertexOrder(TestCase):
    def test_tile_and_untile(self):
        mask = np.array([False, True, False, True, True])
        order = VertexOrder.from_mask(mask)
        positions = np.arange(15.0).reshape(5, 3)
        apparel, body = order.untile(positions)
        np.testing.assert_array_equal(apparel.numpy(), positions[mask])
        np.testing.assert_array_equal(body.numpy(), positions[~mask])
        np.testing.assert_array_equal(order.tile(apparel, body).numpy(), positions)
        self.assertEqual(order.inverse.tolist(), [3, 0, 4, 1, 2])

    def test_must_partition(self):
        with self.assertRaises(ShapeMismatchException):
            VertexOrder(apparel_indices=[0, 1], body_indices=[1, 2])

    def test_tile_row_counts(self):
        order = VertexOrder.from_mask(np.array([True, False]))
        with self.assertRaises(ShapeMismatchException):
            order.tile(np.zeros((2, 3)), np.zeros((1, 3)))


class RefineFixture:
    def __init__(self, seed=0):
        rng = np.random.default_rng(seed)
        self.character = tube_character()
        mask = self.character.gt_apparel_mask
        self.order = VertexOrder.from_mask(mask)
        self.probabilities = np.where(mask, 0.9, 0.1)
        self.one_ring = one_ring_mean_operator(self.character.num_vertices, self.character.edges)
        self.root = self.character.joints[0] + 0.1 * rng.normal(size=3)
        noisy = self.character.vertices + 0.02 * rng.normal(size=self.character.vertices.shape)
        self.apparel, self.body = noisy[mask], noisy[~mask]
        self.network = RefineNetwork(SMALL_CONFIG, rng)

    def refine(self):
        return self.network.joint_refine(
            self.apparel, self.body, self.order, self.probabilities, self.one_ring, self.root
        )

    def loss(self):
        refined, delta = self.refine()
        vertices = self.character.vertices
        return refine_losses(refined, vertices, vertices, self.character.edges, delta).total


class TestRefineNetwork(TestCase):
    def test_output_is_tiled_plus_delta(self):
        fixture = RefineFixture()
        refined, delta = fixture.refine()
        tiled = fixture.order.tile(fixture.apparel, fixture.body).numpy()
        self.assertEqual(refined.shape, (fixture.character.num_vertices, 3))
        np.testing.assert_allclose(refined.numpy(), tiled + delta.numpy(), atol=1e-15)

    def test_zero_network_is_identity(self):
        fixture = RefineFixture()
        for parameter in fixture.network.store:
            parameter.value[...] = 0.0
        refined, delta = fixture.refine()
        np.testing.assert_array_equal(delta.numpy(), 0.0)
        np.testing.assert_array_equal(
            refined.numpy(), fixture.order.tile(fixture.apparel, fixture.body).numpy()
        )

    def test_translation_invariant_delta(self):
        fixture = RefineFixture()
        _, delta = fixture.refine()
        fixture.apparel, fixture.body = fixture.apparel + 1.5, fixture.body + 1.5
        fixture.root = fixture.root + 1.5
        _, moved_delta = fixture.refine()
        np.testing.assert_allclose(moved_delta.numpy(), delta.numpy(), atol=1e-12)

    def test_missing_vertex_order(self):
        fixture = RefineFixture()
        with self.assertRaises(MissingVertexOrderException):
            fixture.network.joint_refine(
                fixture.apparel,
                fixture.body,
                None,
                fixture.probabilities,
                fixture.one_ring,
                fixture.root,
            )

    def test_require_trained(self):
        with self.assertRaises(UntrainedModelException):
            RefineFixture().network.require_trained()

    def test_gradients(self):
        for seed in range(NUM_SEEDS):
            fixture = RefineFixture(seed=seed)
            error = max_gradient_error(fixture.loss, list(fixture.network.store), seed)
            self.assertLessEqual(error, TOLERANCE, f"seed {seed}")


class TestRefineLosses(TestCase):
    def test_terms(self):
        fixture = RefineFixture()
        vertices = fixture.character.vertices
        delta = np.full((len(vertices), 3), 0.5)
        losses = refine_losses(vertices, vertices, vertices, fixture.character.edges, delta)
        self.assertEqual(losses.vertex.item(), 0.0)
        self.assertEqual(losses.edge.item(), 0.0)
        self.assertAlmostEqual(losses.regularization.item(), 0.75)
        self.assertAlmostEqual(losses.total.item(), 0.01 * 0.75)
