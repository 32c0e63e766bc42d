from unittest import TestCase

import numpy as np

from apparelmotion.core.config import ApparelConfig
from apparelmotion.geometry.mesh import induced_edges, mesh_edges, relabel_edges
from apparelmotion.models.apparel import (
    ApparelNetwork,
    ApparelState,
    apparel_components,
    apparel_losses,
    edge_conv,
    grouped_adjacency,
    motion_features,
)
from apparelmotion.models.exceptions import (
    NonFiniteDisplacementException,
    UntrainedModelException,
    WarmupIncompleteException,
)
from apparelmotion.nn.exceptions import ShapeMismatchException
from apparelmotion.nn.layers import MLP
from apparelmotion.nn.parameters import ParameterStore
from apparelmotion.nn.tensor import Tensor
from tests.meshutil import grid_faces, random_motion, tube_character
from tests.nnutil import NUM_SEEDS, TOLERANCE, max_gradient_error, parameters_named

SMALL_CONFIG = ApparelConfig(
    m_dim=4, motion_widths=(6,), edge_conv_blocks=2, hidden_width=5, decoder_widths=(4,)
)


def two_patches():
    """Apparel-local edges of two disjoint 3x3 grids."""
    first = mesh_edges(np.array(grid_faces(np.arange(9).reshape(3, 3))))
    return np.concatenate([first, first + 9])


class ApparelFixture:
    def __init__(self, seed=0, num_frames=4):
        self.character = tube_character(num_joints=3)
        mask = self.character.gt_apparel_mask
        self.indices = np.flatnonzero(mask)
        self.rest = self.character.vertices[self.indices]
        self.edges = relabel_edges(
            induced_edges(self.character.edges, mask), self.indices, self.character.num_vertices
        )
        self.component_id = apparel_components(len(self.indices), self.edges)
        self.adjacency = grouped_adjacency(self.edges, self.component_id)
        self.motion = random_motion(self.character.num_joints, num_frames, seed=seed)
        self.features = motion_features(
            self.motion.rotations, self.motion.translations, self.character.height
        )
        self.roots = self.character.joints[0] + self.motion.translations[:, 0]
        rng = np.random.default_rng(seed)
        self.network = ApparelNetwork(SMALL_CONFIG, self.character.num_joints, rng)
        self.targets = [
            self.rest + 0.01 * rng.normal(size=self.rest.shape) for _ in range(num_frames)
        ]

    def state(self):
        return ApparelState.from_rest(self.rest, self.component_id, SMALL_CONFIG.history_k)

    def rollout(self, steps):
        return self.network.rollout(
            self.state(), self.features[1 : steps + 1], self.roots[:steps], self.adjacency
        )

    def rollout_loss(self, steps=3):
        total = Tensor(0.0)
        for step, predicted in enumerate(self.rollout(steps)):
            losses = apparel_losses(predicted, self.targets[step], self.rest, self.edges)
            total = total + losses.total
        return total


class TestApparelState(TestCase):
    def test_push_keeps_newest_first(self):
        rest = np.zeros((2, 3))
        state = ApparelState.from_rest(rest, np.zeros(2), history_k=3)
        pushed = state.push(np.ones((2, 3)))
        self.assertEqual(len(pushed.history), 3)
        np.testing.assert_array_equal(pushed.positions.numpy(), np.ones((2, 3)))
        self.assertEqual(len(state.history), 3)
        np.testing.assert_array_equal(state.positions.numpy(), rest)

    def test_warmup_required(self):
        fixture = ApparelFixture()
        state = ApparelState([fixture.rest, fixture.rest], fixture.component_id, history_k=3)
        self.assertFalse(state.is_warm)
        with self.assertRaises(WarmupIncompleteException):
            fixture.network.assemble_features(state, fixture.features[1], fixture.roots[0])


class TestFeatures(TestCase):
    def test_motion_features(self):
        motion = random_motion(num_joints=2, num_frames=3)
        features = motion_features(motion.rotations, motion.translations, 2.0)
        self.assertEqual(features.shape, (3, 24))
        np.testing.assert_array_equal(features[1, :9], motion.rotations[1, 0].reshape(-1))
        np.testing.assert_array_equal(features[1, 9:12], motion.translations[1, 0] / 2.0)

    def test_assembled_kinematics(self):
        fixture = ApparelFixture()
        newest = fixture.rest + 0.3
        middle = fixture.rest + 0.1
        state = ApparelState([newest, middle, fixture.rest], fixture.component_id)
        features = fixture.network.assemble_features(
            state, fixture.features[1], fixture.roots[0]
        ).numpy()
        self.assertEqual(features.shape, (len(fixture.rest), 9 + SMALL_CONFIG.m_dim))
        np.testing.assert_allclose(features[:, :3], newest - fixture.roots[0])
        np.testing.assert_allclose(features[:, 3:6], 0.2)
        np.testing.assert_allclose(features[:, 6:9], 0.1, atol=1e-12)
        np.testing.assert_array_equal(features[0, 9:], features[-1, 9:])

    def test_frame_feature_width(self):
        fixture = ApparelFixture()
        with self.assertRaises(ShapeMismatchException):
            fixture.network.assemble_features(fixture.state(), np.zeros(5), fixture.roots[0])


class TestGroupedEdgeConv(TestCase):
    def test_components_of_two_patches(self):
        edges = two_patches()
        self.assertEqual(apparel_components(18, edges).tolist(), [0] * 9 + [1] * 9)

    def test_grouped_adjacency_drops_cross_component_edges(self):
        edges = np.array([[0, 1], [1, 2], [2, 3]])
        adjacency = grouped_adjacency(edges, np.array([0, 0, 1, 1]))
        self.assertEqual(sorted(map(tuple, adjacency.tolist())), [(0, 1), (1, 0), (2, 3), (3, 2)])

    def test_edge_conv_ignores_other_components(self):
        rng = np.random.default_rng(0)
        edges = two_patches()
        adjacency = grouped_adjacency(edges, apparel_components(18, edges))
        edge_fn = MLP(ParameterStore(), "edge", (8, 6, 5), rng, activate_last=True)
        features = rng.normal(size=(18, 4))
        changed = np.array(features)
        changed[9:] = rng.normal(size=(9, 4))
        before = edge_conv(features, adjacency, edge_fn).numpy()
        after = edge_conv(changed, adjacency, edge_fn).numpy()
        np.testing.assert_allclose(before[:9], after[:9], rtol=0, atol=1e-12)
        self.assertFalse(np.array_equal(before[9:], after[9:]))

    def test_isolated_vertex_gets_zero(self):
        rng = np.random.default_rng(1)
        edge_fn = MLP(ParameterStore(), "edge", (4, 3), rng)
        out = edge_conv(rng.normal(size=(3, 2)), np.array([[0, 1], [1, 0]]), edge_fn).numpy()
        np.testing.assert_array_equal(out[2], 0.0)

    def test_network_output_of_a_patch_ignores_the_other(self):
        fixture = ApparelFixture()
        edges = two_patches()
        component_id = apparel_components(18, edges)
        adjacency = grouped_adjacency(edges, component_id)
        rest = np.concatenate([fixture.rest, fixture.rest + [1.0, 0.0, 0.0]])
        moved = np.array(rest)
        moved[9:] += 0.05
        network = fixture.network
        before = network.displacement(
            ApparelState.from_rest(rest, component_id),
            fixture.features[1],
            fixture.roots[0],
            adjacency,
        ).numpy()
        after = network.displacement(
            ApparelState.from_rest(moved, component_id),
            fixture.features[1],
            fixture.roots[0],
            adjacency,
        ).numpy()
        np.testing.assert_allclose(before[:9], after[:9], rtol=0, atol=1e-12)


class TestRollout(TestCase):
    def test_zero_decoder_keeps_apparel_still(self):
        fixture = ApparelFixture()
        for parameter in parameters_named(fixture.network.store, "apparel.decoder"):
            parameter.value[...] = 0.0
        for predicted in fixture.rollout(3):
            np.testing.assert_array_equal(predicted.numpy(), fixture.rest)

    def test_non_finite_displacement(self):
        fixture = ApparelFixture()
        parameters_named(fixture.network.store, "apparel.decoder.1.bias")[0].value[0] = np.nan
        with self.assertRaises(NonFiniteDisplacementException):
            fixture.network.rollout(
                fixture.state(),
                fixture.features[1:3],
                fixture.roots[:2],
                fixture.adjacency,
                first_frame=7,
            )

    def test_require_trained(self):
        fixture = ApparelFixture()
        with self.assertRaises(UntrainedModelException):
            fixture.network.require_trained()
        fixture.network.store.trained = True
        fixture.network.require_trained()

    def test_gradients(self):
        prefixes = ("apparel.motion", "apparel.block", "apparel.decoder")
        for seed in range(NUM_SEEDS):
            fixture = ApparelFixture(seed=seed)
            for prefix in prefixes:
                error = max_gradient_error(
                    lambda: fixture.rollout_loss(steps=1),
                    parameters_named(fixture.network.store, prefix),
                    seed,
                )
                self.assertLessEqual(error, TOLERANCE, f"{prefix} seed {seed}")

    def test_three_step_rollout_gradients(self):
        for seed in range(NUM_SEEDS):
            fixture = ApparelFixture(seed=seed)
            error = max_gradient_error(
                lambda: fixture.rollout_loss(steps=3), list(fixture.network.store), seed
            )
            self.assertLessEqual(error, TOLERANCE, f"seed {seed}")


class TestApparelLosses(TestCase):
    def test_rigid_motion_has_zero_loss(self):
        fixture = ApparelFixture()
        rotation = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
        moved = fixture.rest @ rotation.T + [0.5, -1.0, 2.0]
        losses = apparel_losses(moved, moved, fixture.rest, fixture.edges)
        self.assertEqual(losses.vertex.item(), 0.0)
        self.assertAlmostEqual(losses.total.item(), 0.0, places=12)

    def test_weighted_total(self):
        fixture = ApparelFixture()
        stretched = 1.1 * fixture.rest
        losses = apparel_losses(stretched, fixture.rest, fixture.rest, fixture.edges)
        self.assertAlmostEqual(
            losses.total.item(), losses.vertex.item() + 100.0 * losses.edge.item()
        )
        self.assertGreater(losses.edge.item(), 0.0)
