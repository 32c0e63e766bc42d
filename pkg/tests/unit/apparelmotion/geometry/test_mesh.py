from unittest import TestCase

import numpy as np

from apparelmotion.geometry.mesh import (
    adjacency_matrix,
    connected_component_labels,
    edge_lengths,
    induced_edges,
    mesh_edges,
    one_ring_mean_operator,
    relabel_edges,
)

TWO_TRIANGLES = np.array([[0, 1, 2], [2, 1, 3]])


class TestMeshEdges(TestCase):
    def test_shared_edge_counted_once(self):
        self.assertEqual(len(mesh_edges(TWO_TRIANGLES)), 5)

    def test_degenerate_face_edges_dropped(self):
        self.assertEqual(mesh_edges(np.array([[0, 0, 1]])).tolist(), [[0, 1]])

    def test_no_faces(self):
        self.assertEqual(mesh_edges(np.zeros((0, 3), dtype=int)).shape, (0, 2))


class TestEdgeHelpers(TestCase):
    def test_edge_lengths(self):
        positions = np.array([[0.0, 0.0, 0.0], [3.0, 4.0, 0.0], [0.0, 0.0, 2.0]])
        edges = np.array([[0, 1], [0, 2]])
        np.testing.assert_allclose(edge_lengths(positions, edges), [5.0, 2.0])

    def test_induced_and_relabelled(self):
        edges = mesh_edges(TWO_TRIANGLES)
        mask = np.array([False, True, True, True])
        kept = induced_edges(edges, mask)
        self.assertEqual(kept.tolist(), [[1, 2], [1, 3], [2, 3]])
        relabeled = relabel_edges(kept, np.flatnonzero(mask), 4)
        self.assertEqual(relabeled.tolist(), [[0, 1], [0, 2], [1, 2]])

    def test_adjacency_is_symmetric(self):
        adjacency = adjacency_matrix(4, mesh_edges(TWO_TRIANGLES), np.arange(1.0, 6.0))
        dense = adjacency.toarray()
        np.testing.assert_array_equal(dense, dense.T)
        self.assertEqual(dense[1, 3], 4.0)

    def test_components_numbered_by_lowest_member(self):
        edges = np.array([[0, 3], [1, 2]])
        self.assertEqual(connected_component_labels(5, edges).tolist(), [0, 1, 1, 0, 2])

    def test_one_ring_mean(self):
        operator = one_ring_mean_operator(5, mesh_edges(TWO_TRIANGLES))
        values = np.array([0.0, 3.0, 6.0, 9.0, 7.0])
        np.testing.assert_allclose(operator @ values, [4.5, 5.0, 4.0, 4.5, 7.0])
