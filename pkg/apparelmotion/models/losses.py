"""Loss terms shared by the deformation modules."""
import numpy as np

from apparelmotion.nn import ops
from apparelmotion.nn.tensor import Operand, Tensor, as_tensor


def vertex_l1_loss(predicted: Operand, target: Operand) -> Tensor:
    """Mean absolute error over vertices and coordinates."""
    return ops.mean(ops.abs(ops.sub(predicted, target)))


def edge_length_loss(positions: Operand, edges: np.ndarray, rest_lengths: np.ndarray) -> Tensor:
    """Mean absolute deviation of edge lengths from rest_lengths; zero without edges."""
    positions = as_tensor(positions)
    if len(edges) == 0:
        return Tensor(0.0)
    vectors = ops.gather(positions, edges[:, 0]) - ops.gather(positions, edges[:, 1])
    return ops.mean(ops.abs(ops.norm(vectors, axis=-1) - rest_lengths))


def rest_edge_lengths(rest_positions: np.ndarray, edges: np.ndarray) -> np.ndarray:
    if len(edges) == 0:
        return np.zeros(0)
    return np.linalg.norm(rest_positions[edges[:, 0]] - rest_positions[edges[:, 1]], axis=-1)
