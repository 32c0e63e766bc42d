"""Joint refinement of the tiled body and apparel outputs."""
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import root_validator, validator
from scipy import sparse

from apparelmotion.core.base_model import BaseImmutableModel, frozen_array
from apparelmotion.core.config import RefineConfig
from apparelmotion.models.exceptions import MissingVertexOrderException, UntrainedModelException
from apparelmotion.models.losses import edge_length_loss, rest_edge_lengths, vertex_l1_loss
from apparelmotion.nn import ops
from apparelmotion.nn.exceptions import ShapeMismatchException
from apparelmotion.nn.layers import MLP
from apparelmotion.nn.parameters import ParameterStore
from apparelmotion.nn.tensor import Operand, Tensor, as_tensor

REFINE_INPUT_WIDTH = 7


class RefineLosses(NamedTuple):
    vertex: Tensor
    edge: Tensor
    regularization: Tensor
    total: Tensor


class VertexOrder(BaseImmutableModel):
    """Permutation between mesh order and the concatenation [apparel rows, body rows].

    Args:
        apparel_indices: mesh index of every apparel row, ascending
        body_indices: mesh index of every body row, ascending
    """

    apparel_indices: np.ndarray
    body_indices: np.ndarray

    # pylint: disable=no-self-argument
    @validator("apparel_indices", "body_indices", pre=True)
    def index_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value, dtype=np.int64).reshape(-1)

    @root_validator(skip_on_failure=True)
    def is_partition(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        combined = np.concatenate([values["apparel_indices"], values["body_indices"]])
        if not np.array_equal(np.sort(combined), np.arange(len(combined))):
            raise ShapeMismatchException("apparel and body indices must partition the mesh")
        return values

    @classmethod
    def from_mask(cls, apparel_mask: np.ndarray) -> "VertexOrder":
        apparel_mask = np.asarray(apparel_mask, dtype=bool)
        return cls(
            apparel_indices=np.flatnonzero(apparel_mask), body_indices=np.flatnonzero(~apparel_mask)
        )

    @property
    def num_vertices(self) -> int:
        return len(self.apparel_indices) + len(self.body_indices)

    @property
    def inverse(self) -> np.ndarray:
        """Row of [apparel, body] holding each mesh vertex."""
        inverse = np.empty(self.num_vertices, dtype=np.int64)
        inverse[np.concatenate([self.apparel_indices, self.body_indices])] = np.arange(
            self.num_vertices
        )
        return inverse

    def tile(self, apparel: Operand, body: Operand) -> Tensor:
        """Mesh-ordered (N, 3) positions from apparel (N_a, 3) and body (N_b, 3) rows."""
        apparel, body = as_tensor(apparel), as_tensor(body)
        if len(apparel) != len(self.apparel_indices) or len(body) != len(self.body_indices):
            raise ShapeMismatchException(
                f"tile expects {len(self.apparel_indices)} apparel and {len(self.body_indices)} "
                f"body rows, got {apparel.shape} and {body.shape}"
            )
        return ops.gather(ops.concat([apparel, body], axis=0), self.inverse)

    def untile(self, positions: Operand) -> Tuple[Tensor, Tensor]:
        positions = as_tensor(positions)
        return ops.gather(positions, self.apparel_indices), ops.gather(positions, self.body_indices)


class RefineNetwork:
    """f_j: a per-vertex MLP over (position relative to the root joint, apparel probability,
    one-ring mean position relative to the root joint) predicting a displacement."""

    def __init__(self, config: RefineConfig, rng: np.random.Generator):
        self.config = config
        self.store = ParameterStore()
        self.mlp = MLP(self.store, "refine", (REFINE_INPUT_WIDTH,) + config.widths + (3,), rng)

    def joint_refine(
        self,
        apparel: Operand,
        body: Operand,
        vertex_order: Optional[VertexOrder],
        probabilities: np.ndarray,
        one_ring: sparse.spmatrix,
        root: np.ndarray,
    ) -> Tuple[Tensor, Tensor]:
        """Refined mesh V (N, 3) = tile(apparel, body) + delta, and delta.

        Args:
            apparel: (N_a, 3) apparel positions
            body: (N_b, 3) body positions
            vertex_order: permutation table of the segmentation that split the mesh
            probabilities: (N,) apparel probability per mesh vertex
            one_ring: (N, N) one_ring_mean_operator of the mesh
            root: (3,) root joint position of the frame
        """
        if vertex_order is None:
            raise MissingVertexOrderException("tiling needs the vertex order permutation table")
        tiled = vertex_order.tile(apparel, body)
        relative = tiled - root
        neighborhood = ops.sparse_matmul(one_ring, relative)
        inputs = ops.concat(
            [relative, np.asarray(probabilities, dtype=np.float64)[:, None], neighborhood], axis=-1
        )
        delta = self.mlp(inputs)
        return tiled + delta, delta

    def require_trained(self) -> None:
        if not self.store.trained:
            raise UntrainedModelException("refinement parameters are not trained")


def refine_losses(
    predicted: Operand,
    target: np.ndarray,
    rest: np.ndarray,
    edges: np.ndarray,
    delta: Operand,
    config: Optional[RefineConfig] = None,
) -> RefineLosses:
    """Whole-mesh vertex L1, edge length over all mesh edges (boundary edges included) and the
    mean squared norm of the refinement displacement."""
    config = config if config is not None else RefineConfig()
    vertex = vertex_l1_loss(predicted, target)
    edge = edge_length_loss(predicted, edges, rest_edge_lengths(rest, edges))
    regularization = ops.mean(ops.sum(ops.square(as_tensor(delta)), axis=-1))
    total = (
        config.lambda_vertex * vertex
        + config.lambda_edge * edge
        + config.lambda_reg * regularization
    )
    return RefineLosses(vertex=vertex, edge=edge, regularization=regularization, total=total)
