"""Numpy linear blend skinning and the capsule body volume of posed skeletons."""
from typing import NamedTuple

import numpy as np

from apparelmotion.geometry.character import ROOT_PARENT, RiggedCharacter
from apparelmotion.geometry.exceptions import InvalidCharacterException


def joint_transformed_positions(
    positions: np.ndarray, joints: np.ndarray, rotations: np.ndarray, translations: np.ndarray
) -> np.ndarray:
    """(N, J, 3) position of every vertex rigidly carried by every joint:
    R_j (v - J_j) + J_j + t_j."""
    offsets = positions[:, None, :] - joints[None, :, :]
    return np.einsum("jab,njb->nja", rotations, offsets) + joints[None] + translations[None]


def linear_blend_skinning(
    positions: np.ndarray,
    weights: np.ndarray,
    joints: np.ndarray,
    rotations: np.ndarray,
    translations: np.ndarray,
) -> np.ndarray:
    """(N, 3) skinned positions sum_j W_ij (R_j (v_i - J_j) + J_j + t_j)."""
    carried = joint_transformed_positions(positions, joints, rotations, translations)
    return np.einsum("nj,nja->na", weights, carried)


def posed_joints(joints: np.ndarray, translations: np.ndarray) -> np.ndarray:
    """Joint positions after a frame's transforms; rotations act about the joint itself."""
    return joints + translations


class Capsules(NamedTuple):
    """Segments starts[c] -> ends[c] swept by spheres of radii[c]."""

    starts: np.ndarray
    ends: np.ndarray
    radii: np.ndarray


def body_capsules(character: RiggedCharacter, joint_positions: np.ndarray) -> Capsules:
    """One capsule per bone (parent to child, with the child's bone radius) and a sphere at the
    root."""
    if character.bone_radii is None:
        raise InvalidCharacterException("character has no bone radii to build capsules from")
    parents = character.parents
    starts = np.where(
        (parents == ROOT_PARENT)[:, None], joint_positions, joint_positions[np.maximum(parents, 0)]
    )
    return Capsules(
        starts=starts, ends=np.array(joint_positions), radii=np.array(character.bone_radii)
    )


def capsule_axis_offsets(points: np.ndarray, capsules: Capsules) -> np.ndarray:
    """(P, C, 3) vector from the closest point on each capsule axis to each point."""
    direction = capsules.ends - capsules.starts
    length_sq = np.sum(direction * direction, axis=-1)
    relative = points[:, None, :] - capsules.starts[None]
    t = np.sum(relative * direction[None], axis=-1) / np.where(length_sq > 0, length_sq, 1.0)
    t = np.clip(t, 0.0, 1.0)
    return relative - t[..., None] * direction[None]


def capsule_distances(points: np.ndarray, capsules: Capsules) -> np.ndarray:
    """(P, C) signed distance from each point to each capsule surface, negative inside."""
    return np.linalg.norm(capsule_axis_offsets(points, capsules), axis=-1) - capsules.radii[None]


def inside_any_capsule(
    points: np.ndarray, capsules: Capsules, tolerance: float = 0.0
) -> np.ndarray:
    """(P,) flags of points strictly deeper than tolerance inside at least one capsule."""
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    return np.any(capsule_distances(points, capsules) < -tolerance, axis=1)


def push_out_of_capsules(points: np.ndarray, capsules: Capsules) -> np.ndarray:
    """Move every point found inside a capsule radially onto its surface, capsule by capsule.
    Points lying exactly on a capsule axis stay where they are."""
    points = np.array(points, dtype=np.float64)
    for start, end, radius in zip(capsules.starts, capsules.ends, capsules.radii):
        direction = end - start
        length_sq = float(direction @ direction)
        t = (points - start) @ direction / length_sq if length_sq > 0 else np.zeros(len(points))
        closest = start + np.clip(t, 0.0, 1.0)[:, None] * direction
        offset = points - closest
        distance = np.linalg.norm(offset, axis=1)
        inside = (distance < radius) & (distance > 1e-12)
        points[inside] = closest[inside] + offset[inside] * (radius / distance[inside])[:, None]
    return points
