import math
from unittest import TestCase

import numpy as np

from apparelmotion.core.config import SegmentationConfig
from apparelmotion.models.exceptions import UntrainedModelException
from apparelmotion.models.segmentation import (
    ApparelMask,
    SegmentationNetwork,
    bce_loss,
    normalize_positions,
)
from apparelmotion.nn.exceptions import ShapeMismatchException
from tests.meshutil import tube_character
from tests.nnutil import NUM_SEEDS, TOLERANCE, max_gradient_error, parameters_named

SMALL_CONFIG = SegmentationConfig(encoder_widths=(6, 5), decoder_widths=(4,))


class TestBceLoss(TestCase):
    def test_uniform_prediction_is_ln2(self):
        loss = bce_loss(np.full(6, 0.5), np.array([0, 1, 0, 1, 1, 0]))
        self.assertAlmostEqual(loss.item(), math.log(2.0), places=12)

    def test_reference_value(self):
        loss = bce_loss(np.array([0.9, 0.2]), np.array([1, 0]))
        self.assertAlmostEqual(loss.item(), 0.164252, places=6)

    def test_clamped_certainty_is_finite(self):
        loss = bce_loss(np.array([0.0, 1.0]), np.array([1, 0]))
        self.assertTrue(np.isfinite(loss.item()))
        self.assertAlmostEqual(loss.item(), -math.log(1e-7), places=6)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchException):
            bce_loss(np.full(3, 0.5), np.zeros(2))


class TestApparelMask(TestCase):
    def test_ties_go_to_body(self):
        mask = ApparelMask.from_probabilities(np.array([0.5, 0.50001, 0.1]))
        self.assertEqual(mask.labels.tolist(), [False, True, False])
        self.assertEqual(mask.num_apparel, 1)
        self.assertEqual(mask.num_body, 2)
        self.assertEqual(mask.apparel_indices.tolist(), [1])
        self.assertEqual(mask.body_indices.tolist(), [0, 2])

    def test_from_labels(self):
        mask = ApparelMask.from_labels(np.array([1, 0, 1]))
        self.assertEqual(mask.probabilities.tolist(), [1.0, 0.0, 1.0])

    def test_length_mismatch(self):
        with self.assertRaises(ShapeMismatchException):
            ApparelMask(probabilities=np.zeros(3), labels=np.zeros(2))


class TestSegmentationNetwork(TestCase):
    def test_normalized_positions(self):
        character = tube_character()
        normalized = normalize_positions(character.vertices)
        np.testing.assert_allclose(normalized.mean(axis=0), 0.0, atol=1e-12)
        self.assertAlmostEqual(float(np.ptp(normalized[:, 1])), 1.0)

    def test_probabilities_in_unit_interval(self):
        network = SegmentationNetwork(SMALL_CONFIG, np.random.default_rng(0))
        probabilities = network.probabilities(tube_character().vertices).numpy()
        self.assertEqual(probabilities.shape, (tube_character().num_vertices,))
        self.assertTrue(np.all((probabilities > 0.0) & (probabilities < 1.0)))

    def test_untrained_network_refuses_to_segment(self):
        network = SegmentationNetwork(SMALL_CONFIG, np.random.default_rng(0))
        with self.assertRaises(UntrainedModelException):
            network.segment(tube_character())

    def test_segment_thresholds_probabilities(self):
        network = SegmentationNetwork(SMALL_CONFIG, np.random.default_rng(0))
        network.store.trained = True
        character = tube_character()
        mask = network.segment(character)
        probabilities = network.probabilities(character.vertices).numpy()
        np.testing.assert_array_equal(mask.labels, probabilities > 0.5)

    def test_invariant_to_translation_and_scale(self):
        network = SegmentationNetwork(SMALL_CONFIG, np.random.default_rng(0))
        vertices = tube_character().vertices
        moved = 3.0 * vertices + np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(
            network.probabilities(moved).numpy(),
            network.probabilities(vertices).numpy(),
            atol=1e-12,
        )

    def test_gradients(self):
        character = tube_character()
        for seed in range(NUM_SEEDS):
            rng = np.random.default_rng(seed)
            network = SegmentationNetwork(SMALL_CONFIG, rng)
            vertices = character.vertices + 0.01 * rng.normal(size=character.vertices.shape)
            target = character.gt_apparel_mask
            for prefix in ("segmentation.encoder", "segmentation.decoder"):
                error = max_gradient_error(
                    lambda: bce_loss(network.probabilities(vertices), target),
                    parameters_named(network.store, prefix),
                    seed,
                )
                self.assertLessEqual(error, TOLERANCE, f"{prefix} seed {seed}")
