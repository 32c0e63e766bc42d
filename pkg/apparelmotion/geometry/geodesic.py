"""Vertex to joint geodesic distances over the body edge graph."""
from typing import Any, Dict

import numpy as np
from pydantic import root_validator, validator
from scipy.sparse import csgraph

from apparelmotion.core.base_model import BaseImmutableModel, frozen_array
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.exceptions import (
    InvalidGeodesicMatrixException,
    NoBodyVerticesException,
)
from apparelmotion.geometry.mesh import adjacency_matrix, edge_lengths, induced_edges, relabel_edges

DEGENERATE_EDGE_WEIGHT = 1e-9


class GeodesicMatrix(BaseImmutableModel):
    """Shortest path distances along body mesh edges.

    Args:
        distances: (N_b, J) distance from each body vertex to each joint's anchor vertex
        anchor_vertex: (J,) global vertex index of each joint's anchor
        body_indices: (N_b,) global vertex index of each row
        disconnected: True when some body vertex can not reach some anchor; those entries
            hold the finite sentinel (largest reachable distance + 1)
    """

    distances: np.ndarray
    anchor_vertex: np.ndarray
    body_indices: np.ndarray
    disconnected: bool = False

    # pylint: disable=no-self-argument
    @validator("distances", pre=True)
    def float_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value)

    @validator("anchor_vertex", "body_indices", pre=True)
    def index_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value, dtype=np.int64)

    @root_validator(skip_on_failure=True)
    def shapes(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        distances = values["distances"]
        expected = (len(values["body_indices"]), len(values["anchor_vertex"]))
        if distances.shape != expected:
            raise InvalidGeodesicMatrixException(
                f"distances shape {distances.shape} does not match {expected}"
            )
        return values


def compute_geodesic_matrix(character: RiggedCharacter, body_mask: np.ndarray) -> GeodesicMatrix:
    """Dijkstra from each joint's anchor vertex over the body submesh.

    The anchor of joint j is the body vertex closest (Euclidean) to the joint, ties going to
    the lowest vertex index.
    """
    logger = Logger()
    body_mask = np.asarray(body_mask, dtype=bool)
    body_indices = np.flatnonzero(body_mask)
    if len(body_indices) == 0:
        raise NoBodyVerticesException("no body vertices")
    with logger.bind(num_body_vertices=len(body_indices), num_joints=character.num_joints):
        logger.debug(event=LogEvent.GeodesicStart)
        body_positions = character.vertices[body_indices]
        edges = relabel_edges(
            induced_edges(character.edges, body_mask), body_indices, character.num_vertices
        )
        weights = edge_lengths(body_positions, edges)
        degenerate = weights == 0.0
        if np.any(degenerate):
            logger.warning(
                event=LogEvent.DegenerateEdge,
                edges=body_indices[edges[degenerate]].tolist(),
                weight=DEGENERATE_EDGE_WEIGHT,
            )
            weights = np.where(degenerate, DEGENERATE_EDGE_WEIGHT, weights)
        graph = adjacency_matrix(len(body_indices), edges, weights)

        offsets = body_positions[None, :, :] - character.joints[:, None, :]
        local_anchors = np.argmin(np.linalg.norm(offsets, axis=-1), axis=1)
        unique_anchors, inverse = np.unique(local_anchors, return_inverse=True)
        from_anchor = csgraph.dijkstra(graph, directed=False, indices=unique_anchors)
        distances = from_anchor[inverse].T

        unreachable = ~np.isfinite(distances)
        disconnected = bool(np.any(unreachable))
        if disconnected:
            finite = distances[~unreachable]
            sentinel = (finite.max() if finite.size else 0.0) + 1.0
            logger.warning(
                event=LogEvent.GeodesicUnreachable,
                num_unreachable=int(unreachable.sum()),
                sentinel=sentinel,
            )
            distances = np.where(unreachable, sentinel, distances)
        logger.debug(event=LogEvent.GeodesicEnd, disconnected=disconnected)
    return GeodesicMatrix(
        distances=distances,
        anchor_vertex=body_indices[local_anchors],
        body_indices=body_indices,
        disconnected=disconnected,
    )
