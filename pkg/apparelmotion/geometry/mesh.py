"""Edge-graph helpers for triangle meshes. Edges are int64 (E, 2) arrays of undirected
vertex pairs (i < j) in lexicographic order."""
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph


def mesh_edges(faces: np.ndarray) -> np.ndarray:
    """Unique undirected edges of a triangle list.

    >>> mesh_edges(np.array([[0, 1, 2], [2, 1, 3]])).tolist()
    [[0, 1], [0, 2], [1, 2], [1, 3], [2, 3]]
    """
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0)
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(pairs, axis=0)


def edge_lengths(positions: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Euclidean length of every edge."""
    return np.linalg.norm(positions[edges[:, 0]] - positions[edges[:, 1]], axis=-1)


def induced_edges(edges: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Edges with both end points selected by mask (global indices kept)."""
    keep = mask[edges[:, 0]] & mask[edges[:, 1]]
    return edges[keep]


def relabel_edges(edges: np.ndarray, indices: np.ndarray, num_vertices: int) -> np.ndarray:
    """Map global edge end points onto positions within indices."""
    lookup = np.full(num_vertices, -1, dtype=np.int64)
    lookup[indices] = np.arange(len(indices))
    return lookup[edges]


def adjacency_matrix(
    num_vertices: int, edges: np.ndarray, weights: Optional[np.ndarray] = None
) -> sparse.csr_matrix:
    """Symmetric sparse adjacency matrix; weights default to 1."""
    if weights is None:
        weights = np.ones(len(edges))
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.concatenate([weights, weights])
    return sparse.csr_matrix((data, (rows, cols)), shape=(num_vertices, num_vertices))


def connected_component_labels(num_vertices: int, edges: np.ndarray) -> np.ndarray:
    """Component label per vertex, numbered in order of lowest member index."""
    _, labels = csgraph.connected_components(
        adjacency_matrix(num_vertices, edges), directed=False
    )
    return labels.astype(np.int64)


def one_ring_mean_operator(num_vertices: int, edges: np.ndarray) -> sparse.csr_matrix:
    """Row-normalized operator mapping vertex values to the mean over their one-ring
    neighbours. An isolated vertex maps to itself."""
    adjacency = adjacency_matrix(num_vertices, edges)
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    isolated = degree == 0
    adjacency = adjacency + sparse.diags(isolated.astype(np.float64))
    degree[isolated] = 1.0
    return sparse.csr_matrix(sparse.diags(1.0 / degree) @ adjacency)
