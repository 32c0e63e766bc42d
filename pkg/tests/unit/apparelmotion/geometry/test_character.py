from unittest import TestCase

import numpy as np

from apparelmotion.geometry.character import (
    RiggedCharacter,
    boundary_edges,
    topological_order,
)
from apparelmotion.geometry.exceptions import InvalidCharacterException
from tests.meshutil import BONE_LENGTH, tube_character

TETRAHEDRON = dict(
    vertices=[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    faces=[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
    joints=[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    parents=[-1, 0],
)


def tetrahedron(**changes):
    return RiggedCharacter(**{**TETRAHEDRON, **changes})


class TestRiggedCharacter(TestCase):
    def test_valid(self):
        character = tetrahedron(gt_skinning=np.full((4, 2), 0.5), gt_apparel_mask=[0, 0, 1, 1])
        self.assertEqual(character.num_vertices, 4)
        self.assertEqual(character.num_joints, 2)
        self.assertEqual(character.root, 0)
        self.assertEqual(character.height, 1.0)
        self.assertEqual(character.gt_apparel_mask.dtype, bool)
        self.assertEqual(len(character.edges), 6)

    def test_arrays_are_read_only(self):
        character = tetrahedron()
        with self.assertRaises(ValueError):
            character.vertices[0, 0] = 5.0

    def test_too_few_vertices(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(vertices=TETRAHEDRON["vertices"][:3], faces=[[0, 1, 2]])

    def test_face_out_of_range(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(faces=[[0, 1, 4]])

    def test_non_finite_vertex(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(vertices=[[np.nan, 0.0, 0.0]] + TETRAHEDRON["vertices"][1:])

    def test_two_roots(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(parents=[-1, -1])

    def test_cycle(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(
                joints=[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], parents=[-1, 2, 1]
            )

    def test_skinning_rows_must_sum_to_one(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(gt_skinning=np.full((4, 2), 0.4))

    def test_negative_skinning(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(gt_skinning=np.tile([1.5, -0.5], (4, 1)))

    def test_skinning_shape(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(gt_skinning=np.full((4, 1), 1.0))

    def test_mask_shape(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(gt_apparel_mask=[0, 1])

    def test_pinned_out_of_range(self):
        with self.assertRaises(InvalidCharacterException):
            tetrahedron(pinned_vertices=[7])

    def test_apparel_mask_or_empty(self):
        np.testing.assert_array_equal(tetrahedron().apparel_mask_or_empty(), np.zeros(4, bool))

    def test_bone_lengths(self):
        character = tube_character(num_joints=3)
        np.testing.assert_allclose(
            character.bone_lengths(), [2 * BONE_LENGTH, BONE_LENGTH, BONE_LENGTH]
        )


class TestTopologicalOrder(TestCase):
    def test_parents_precede_children(self):
        parents = np.array([3, 3, 0, -1, 1])
        order = topological_order(parents).tolist()
        self.assertEqual(sorted(order), [0, 1, 2, 3, 4])
        for joint, parent in enumerate(parents):
            if parent >= 0:
                self.assertLess(order.index(parent), order.index(joint))


class TestBoundaryEdges(TestCase):
    def test_crossing_edges(self):
        character = tetrahedron()
        edges = boundary_edges(character, np.array([True, False, False, False]))
        self.assertEqual(edges.tolist(), [[0, 1], [0, 2], [0, 3]])

    def test_detached_apparel_has_no_boundary(self):
        character = tube_character()
        self.assertEqual(len(boundary_edges(character, character.gt_apparel_mask)), 0)
