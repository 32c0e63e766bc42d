"""RiggedCharacter: a rest-pose triangle mesh with its skeleton and optional ground truth."""
from typing import Any, Dict, Optional

import numpy as np
from pydantic import root_validator, validator

from apparelmotion.core.base_model import BaseImmutableModel, frozen_array
from apparelmotion.geometry.exceptions import InvalidCharacterException
from apparelmotion.geometry.mesh import mesh_edges

ROOT_PARENT = -1
SKINNING_ROW_TOLERANCE = 1e-6


class RiggedCharacter(BaseImmutableModel):
    """A character mesh in rest pose.

    Args:
        vertices: (N, 3) rest positions in meters
        faces: (F, 3) triangle vertex indices
        joints: (J, 3) rest joint positions
        parents: (J,) parent joint index per joint, ROOT_PARENT for the root
        gt_skinning: optional (N, J) row-stochastic ground truth skinning weights. Rows of
            body vertices form the body skinning matrix; apparel rows drive the
            physics-disabled ground truth.
        gt_apparel_mask: optional (N,) ground truth apparel flags
        bone_radii: optional (J,) capsule radius of the bone ending at each joint
        pinned_vertices: optional apparel vertices attached to the body
        weld_edges: optional (E, 2) mesh edges joining pinned apparel rings to the body
    """

    vertices: np.ndarray
    faces: np.ndarray
    joints: np.ndarray
    parents: np.ndarray
    gt_skinning: Optional[np.ndarray] = None
    gt_apparel_mask: Optional[np.ndarray] = None
    bone_radii: Optional[np.ndarray] = None
    pinned_vertices: Optional[np.ndarray] = None
    weld_edges: Optional[np.ndarray] = None

    # pylint: disable=no-self-argument
    @validator("vertices", "joints", pre=True)
    def positions_array(cls, value: Any) -> np.ndarray:
        array = frozen_array(value)
        if array.ndim != 2 or array.shape[1] != 3:
            raise InvalidCharacterException(f"expected an (n, 3) position array, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise InvalidCharacterException("positions must be finite")
        return array

    @validator("faces", pre=True)
    def faces_array(cls, value: Any) -> np.ndarray:
        array = frozen_array(value, dtype=np.int64).reshape(-1, 3)
        return array

    @validator("parents", "pinned_vertices", pre=True)
    def index_array(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        return frozen_array(value, dtype=np.int64).reshape(-1)

    @validator("weld_edges", pre=True)
    def edge_array(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        return frozen_array(np.sort(np.asarray(value, dtype=np.int64).reshape(-1, 2), axis=1))

    @validator("gt_skinning", "bone_radii", pre=True)
    def float_array(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        return frozen_array(value)

    @validator("gt_apparel_mask", pre=True)
    def mask_array(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        return frozen_array(value, dtype=bool).reshape(-1)

    @root_validator(skip_on_failure=True)
    def consistent(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        vertices, faces, joints, parents = (
            values["vertices"],
            values["faces"],
            values["joints"],
            values["parents"],
        )
        num_vertices, num_joints = len(vertices), len(joints)
        if num_vertices < 4:
            raise InvalidCharacterException(
                f"a character needs at least 4 vertices, got {num_vertices}"
            )
        if num_joints < 1:
            raise InvalidCharacterException("a character needs at least one joint")
        if faces.size and (faces.min() < 0 or faces.max() >= num_vertices):
            raise InvalidCharacterException(
                f"face indices must lie in [0, {num_vertices}), "
                f"got [{faces.min()}, {faces.max()}]"
            )
        _check_tree(parents, num_joints)
        skinning = values.get("gt_skinning")
        if skinning is not None:
            if skinning.shape != (num_vertices, num_joints):
                raise InvalidCharacterException(
                    f"gt_skinning shape {skinning.shape} does not match "
                    f"{(num_vertices, num_joints)}"
                )
            if np.any(skinning < 0) or np.any(
                np.abs(skinning.sum(axis=1) - 1.0) > SKINNING_ROW_TOLERANCE
            ):
                raise InvalidCharacterException(
                    "gt_skinning rows must be non-negative and sum to 1"
                )
        mask = values.get("gt_apparel_mask")
        if mask is not None and mask.shape != (num_vertices,):
            raise InvalidCharacterException(
                f"gt_apparel_mask shape {mask.shape} does not match {(num_vertices,)}"
            )
        radii = values.get("bone_radii")
        if radii is not None and radii.shape != (num_joints,):
            raise InvalidCharacterException(
                f"bone_radii shape {radii.shape} does not match {(num_joints,)}"
            )
        for key in ("pinned_vertices", "weld_edges"):
            indices = values.get(key)
            if indices is not None and indices.size and (
                indices.min() < 0 or indices.max() >= num_vertices
            ):
                raise InvalidCharacterException(f"{key} index out of range [0, {num_vertices})")
        return values

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_joints(self) -> int:
        return len(self.joints)

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected mesh edges, sorted."""
        return mesh_edges(self.faces)

    @property
    def root(self) -> int:
        return int(np.flatnonzero(self.parents == ROOT_PARENT)[0])

    @property
    def height(self) -> float:
        """Vertical extent of the rest mesh."""
        return float(np.ptp(self.vertices[:, 1]))

    @property
    def skeleton_height(self) -> float:
        """Vertical extent of the rest joints."""
        return float(np.ptp(self.joints[:, 1]))

    def bone_lengths(self) -> np.ndarray:
        """Rest distance from each joint to its parent; the root takes the skeleton height."""
        return bone_lengths(self.joints, self.parents)

    def apparel_mask_or_empty(self) -> np.ndarray:
        if self.gt_apparel_mask is None:
            return np.zeros(self.num_vertices, dtype=bool)
        return np.array(self.gt_apparel_mask)


def bone_lengths(joints: np.ndarray, parents: np.ndarray) -> np.ndarray:
    """Per-joint bone length of a rest skeleton.

    >>> bone_lengths(np.array([[0.0, 0.0, 0.0], [0.0, 2.0, 0.0]]), np.array([-1, 0])).tolist()
    [2.0, 2.0]
    """
    lengths = np.empty(len(joints))
    for joint, parent in enumerate(parents):
        if parent == ROOT_PARENT:
            lengths[joint] = np.ptp(joints[:, 1])
        else:
            lengths[joint] = np.linalg.norm(joints[joint] - joints[parent])
    return lengths


def topological_order(parents: np.ndarray) -> np.ndarray:
    """Joint indices ordered so that every parent precedes its children."""
    children: Dict[int, list] = {}
    roots = []
    for joint, parent in enumerate(parents):
        if parent == ROOT_PARENT:
            roots.append(joint)
        else:
            children.setdefault(int(parent), []).append(joint)
    order = []
    stack = list(reversed(roots))
    while stack:
        joint = stack.pop()
        order.append(joint)
        stack.extend(reversed(children.get(joint, [])))
    return np.array(order, dtype=np.int64)


def boundary_edges(character: RiggedCharacter, apparel_mask: np.ndarray) -> np.ndarray:
    """Mesh edges joining an apparel vertex to a body vertex, as sorted (i < j) pairs in
    lexicographic order."""
    mask = np.asarray(apparel_mask, dtype=bool)
    edges = character.edges
    crossing = mask[edges[:, 0]] != mask[edges[:, 1]]
    return edges[crossing]


def _check_tree(parents: np.ndarray, num_joints: int) -> None:
    if parents.shape != (num_joints,):
        raise InvalidCharacterException(
            f"parents shape {parents.shape} does not match {(num_joints,)}"
        )
    roots = np.flatnonzero(parents == ROOT_PARENT)
    if len(roots) != 1:
        raise InvalidCharacterException(f"skeleton must have exactly one root, found {len(roots)}")
    if np.any((parents < ROOT_PARENT) | (parents >= num_joints)):
        raise InvalidCharacterException("parent index out of range")
    if len(topological_order(parents)) != num_joints:
        raise InvalidCharacterException("parent graph is not a tree")
