from unittest import TestCase

import numpy as np

from apparelmotion.geometry.mesh import connected_component_labels
from apparelmotion.synth.character import (
    MeshBuilder,
    generate_character,
    nearest_two_bones_skinning,
)
from apparelmotion.synth.exceptions import InvalidSynthSpecException
from apparelmotion.synth.skeleton import NUM_JOINTS
from apparelmotion.synth.spec import SynthCharacterSpec


class TestMeshBuilder(TestCase):
    def test_closed_grid_wraps_columns(self):
        builder = MeshBuilder()
        grid = builder.add_vertices(np.zeros((6, 3))).reshape(2, 3)
        builder.add_grid(grid, closed=True)
        self.assertEqual(builder.faces().shape, (6, 3))
        builder = MeshBuilder()
        grid = builder.add_vertices(np.zeros((6, 3))).reshape(2, 3)
        builder.add_grid(grid, closed=False)
        self.assertEqual(builder.faces().shape, (4, 3))

    def test_weld_records_every_zipper_edge(self):
        builder = MeshBuilder()
        apparel = builder.add_vertices(np.zeros((2, 3)))
        body = builder.add_vertices(np.zeros((3, 3)))
        builder.add_weld(apparel, [0.0, 1.0], body, [0.0, 0.5, 1.0], closed=False)
        self.assertEqual(builder.weld_edges, [(0, 2), (0, 3), (1, 3), (1, 4)])
        self.assertEqual(len(builder.faces()), 3)


class TestNearestTwoBonesSkinning(TestCase):
    def test_rows_sum_to_one_on_two_joints(self):
        joints = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 2.0, 0.0], [1.0, 1.0, 0.0]])
        parents = np.array([-1, 0, 1, 1])
        vertices = np.random.default_rng(0).normal(size=(30, 3))
        weights = nearest_two_bones_skinning(vertices, joints, parents)
        np.testing.assert_allclose(weights.sum(axis=1), 1.0)
        self.assertTrue(np.all(np.count_nonzero(weights, axis=1) <= 2))
        # joints 2 and 3 start no bone
        np.testing.assert_array_equal(weights[:, 2:], 0.0)

    def test_vertex_near_a_bone_follows_its_parent(self):
        joints = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 2.0, 0.0]])
        parents = np.array([-1, 0, 1])
        weights = nearest_two_bones_skinning(np.array([[0.01, 0.2, 0.0]]), joints, parents)
        self.assertGreater(weights[0, 0], 0.99)


class TestGenerateCharacter(TestCase):
    @classmethod
    def setUpClass(cls):
        cls.spec = SynthCharacterSpec()
        cls.character = generate_character(cls.spec, 7)

    def test_deterministic_per_seed(self):
        again = generate_character(self.spec, 7)
        np.testing.assert_array_equal(again.vertices, self.character.vertices)
        np.testing.assert_array_equal(again.faces, self.character.faces)
        np.testing.assert_array_equal(again.gt_skinning, self.character.gt_skinning)
        other = generate_character(self.spec, 8)
        self.assertFalse(np.array_equal(other.joints, self.character.joints))

    def test_skeleton_and_skinning(self):
        character = self.character
        self.assertEqual(character.num_joints, NUM_JOINTS)
        np.testing.assert_allclose(character.gt_skinning.sum(axis=1), 1.0, atol=1e-9)
        self.assertEqual(character.bone_radii.shape, (NUM_JOINTS,))

    def test_apparel_mask_is_a_suffix_holding_the_patches(self):
        mask = self.character.gt_apparel_mask
        first = int(np.argmax(mask))
        self.assertTrue(np.all(mask[first:]))
        self.assertFalse(np.any(mask[:first]))
        columns_rows = (
            self.spec.skirt_resolution,
            self.spec.cape_resolution,
            self.spec.ponytail_resolution,
        )
        self.assertEqual(int(mask.sum()), sum(c * r for c, r in columns_rows))

    def test_pinned_vertices_are_top_rows(self):
        character = self.character
        pinned = character.pinned_vertices
        self.assertTrue(np.all(character.gt_apparel_mask[pinned]))
        resolutions = (
            self.spec.skirt_resolution,
            self.spec.cape_resolution,
            self.spec.ponytail_resolution,
        )
        self.assertEqual(len(pinned), sum(columns for columns, _ in resolutions))

    def test_weld_edges_join_apparel_to_body(self):
        character = self.character
        welds = character.weld_edges
        self.assertGreater(len(welds), 0)
        mask = character.gt_apparel_mask
        np.testing.assert_array_equal(mask[welds].sum(axis=1), 1)
        edges = {tuple(edge) for edge in character.edges.tolist()}
        for edge in welds.tolist():
            self.assertIn(tuple(sorted(edge)), edges)

    def test_mesh_is_connected(self):
        character = self.character
        labels = connected_component_labels(character.num_vertices, character.edges)
        self.assertEqual(len(np.unique(labels)), 1)

    def test_patches_can_be_disabled(self):
        spec = SynthCharacterSpec(
            skirt_resolution=(0, 0), cape_resolution=(0, 0), ponytail_resolution=(0, 0)
        )
        character = generate_character(spec, 1)
        self.assertFalse(np.any(character.gt_apparel_mask))
        self.assertEqual(len(character.pinned_vertices), 0)
        self.assertEqual(character.weld_edges.shape, (0, 2))

    def test_negative_segment_rings(self):
        with self.assertRaises(InvalidSynthSpecException):
            generate_character(SynthCharacterSpec(segment_rings=-1), 0)
