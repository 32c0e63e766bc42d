"""Procedural capsule-limb humanoids with welded apparel patches."""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from apparelmotion.geometry.character import ROOT_PARENT, RiggedCharacter
from apparelmotion.geometry.skinning import Capsules, capsule_distances
from apparelmotion.synth.exceptions import InvalidSynthSpecException
from apparelmotion.synth.skeleton import (
    CHAINS,
    JOINT_INDEX,
    bone_radii,
    jittered_spec,
    rest_joints,
    skeleton_parents,
)
from apparelmotion.synth.spec import SynthCharacterSpec

SKINNING_EPS = 1e-8


class MeshBuilder:
    """Accumulates vertices and triangles; every add_* returns the new vertex indices."""

    def __init__(self) -> None:
        self._vertices: List[np.ndarray] = []
        self._faces: List[Tuple[int, int, int]] = []
        self.weld_edges: List[Tuple[int, int]] = []

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    def add_vertices(self, points: np.ndarray) -> np.ndarray:
        start = self.num_vertices
        self._vertices.extend(np.asarray(points, dtype=np.float64).reshape(-1, 3))
        return np.arange(start, self.num_vertices)

    def add_band(self, ring_a: Sequence[int], ring_b: Sequence[int]) -> None:
        """Quads between two closed rings of equal size, split into triangles."""
        count = len(ring_a)
        for k in range(count):
            a0, a1 = ring_a[k], ring_a[(k + 1) % count]
            b0, b1 = ring_b[k], ring_b[(k + 1) % count]
            self._faces.append((a0, a1, b1))
            self._faces.append((a0, b1, b0))

    def add_fan(self, ring: Sequence[int], tip: int) -> None:
        count = len(ring)
        for k in range(count):
            self._faces.append((ring[k], ring[(k + 1) % count], tip))

    def add_grid(self, grid: np.ndarray, closed: bool) -> None:
        """Triangles of a (rows, columns) index grid; closed joins the last column to the first."""
        rows, columns = grid.shape
        spans = columns if closed else columns - 1
        for row in range(rows - 1):
            for column in range(spans):
                nxt = (column + 1) % columns
                a, b = grid[row, column], grid[row, nxt]
                c, d = grid[row + 1, column], grid[row + 1, nxt]
                self._faces.append((a, b, d))
                self._faces.append((a, d, c))

    def add_weld(
        self,
        apparel: Sequence[int],
        apparel_params: Sequence[float],
        body: Sequence[int],
        body_params: Sequence[float],
        closed: bool,
    ) -> None:
        """Zip an apparel row to a body vertex run by increasing parameter, recording every
        apparel-body edge of the zipper."""
        apparel, apparel_params = list(apparel), list(apparel_params)
        body, body_params = list(body), list(body_params)
        if closed:
            apparel.append(apparel[0])
            apparel_params.append(apparel_params[0] + 1.0)
            body.append(body[0])
            body_params.append(body_params[0] + 1.0)
        i, j = 0, 0
        self._record_weld(apparel[i], body[j])
        while i < len(apparel) - 1 or j < len(body) - 1:
            advance_apparel = j == len(body) - 1 or (
                i < len(apparel) - 1 and apparel_params[i + 1] <= body_params[j + 1]
            )
            if advance_apparel:
                self._faces.append((apparel[i], apparel[i + 1], body[j]))
                i += 1
            else:
                self._faces.append((apparel[i], body[j + 1], body[j]))
                j += 1
            self._record_weld(apparel[i], body[j])

    def _record_weld(self, apparel_vertex: int, body_vertex: int) -> None:
        edge = (min(apparel_vertex, body_vertex), max(apparel_vertex, body_vertex))
        if edge not in self.weld_edges:
            self.weld_edges.append(edge)

    def vertices(self) -> np.ndarray:
        return np.array(self._vertices)

    def faces(self) -> np.ndarray:
        return np.array(self._faces, dtype=np.int64).reshape(-1, 3)


def _perpendicular(axis: np.ndarray, previous: Optional[np.ndarray]) -> np.ndarray:
    """A unit vector orthogonal to axis, transported from previous when given."""
    if previous is None:
        reference = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        candidate = np.cross(axis, reference)
    else:
        candidate = previous - np.dot(previous, axis) * axis
        if np.linalg.norm(candidate) < 1e-9:
            return _perpendicular(axis, None)
    return candidate / np.linalg.norm(candidate)


def _ring_points(
    center: np.ndarray, axis: np.ndarray, u: np.ndarray, radius: float, resolution: int
) -> np.ndarray:
    w = np.cross(axis, u)
    angles = 2.0 * np.pi * np.arange(resolution) / resolution
    return center + radius * (np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * w)


def _build_body(
    builder: MeshBuilder, spec: SynthCharacterSpec, joints: np.ndarray, radii: np.ndarray
) -> Dict[Tuple[int, int], np.ndarray]:
    """Sweep a tube along every chain. Returns ring vertex indices keyed by (joint, step):
    step 0 is the ring at the joint, step s > 0 the s-th ring along the bone leaving it."""
    rings: Dict[Tuple[int, int], np.ndarray] = {}
    resolution = spec.ring_resolution
    for chain in CHAINS:
        positions = joints[list(chain.joints)]
        u: Optional[np.ndarray] = None
        chain_rings: List[np.ndarray] = []
        last = len(chain.joints) - 1
        for position, joint in enumerate(chain.joints):
            before = positions[max(position - 1, 0)]
            after = positions[min(position + 1, last)]
            axis = (after - before) / np.linalg.norm(after - before)
            radius = radii[chain.joints[1]] if position == 0 else radii[joint]
            u = _perpendicular(axis, u)
            ring = builder.add_vertices(
                _ring_points(positions[position], axis, u, radius, resolution)
            )
            rings[(joint, 0)] = ring
            chain_rings.append(ring)
            if position == last:
                continue
            bone = positions[position + 1] - positions[position]
            bone_axis = bone / np.linalg.norm(bone)
            for step in range(1, spec.segment_rings + 1):
                center = positions[position] + bone * step / (spec.segment_rings + 1)
                u = _perpendicular(bone_axis, u)
                radius = radii[chain.joints[position + 1]]
                ring = builder.add_vertices(_ring_points(center, bone_axis, u, radius, resolution))
                rings[(joint, step)] = ring
                chain_rings.append(ring)
        for ring_a, ring_b in zip(chain_rings[:-1], chain_rings[1:]):
            builder.add_band(ring_a, ring_b)
        tip_axis = positions[last] - positions[last - 1]
        tip_axis /= np.linalg.norm(tip_axis)
        tip = builder.add_vertices(positions[last] + 0.5 * radii[chain.joints[last]] * tip_axis)
        builder.add_fan(chain_rings[-1], int(tip[0]))
        if chain.attach != ROOT_PARENT:
            builder.add_band(rings[(chain.attach, 0)], chain_rings[0])
    return rings


def _grid(builder: MeshBuilder, points: np.ndarray) -> np.ndarray:
    rows, columns = points.shape[:2]
    return builder.add_vertices(points.reshape(-1, 3)).reshape(rows, columns)


def _back_run(
    vertices: np.ndarray, ring: np.ndarray, center: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Ring vertices behind center (z below the center) ordered by x, with x parameters."""
    back = ring[vertices[ring, 2] < center[2] - 1e-12]
    back = back[np.argsort(vertices[back, 0], kind="stable")]
    xs = vertices[back, 0]
    span = xs.max() - xs.min() if len(xs) > 1 else 1.0
    return back, (xs - xs.min()) / span


def _build_apparel(
    builder: MeshBuilder,
    spec: SynthCharacterSpec,
    joints: np.ndarray,
    rings: Dict[Tuple[int, int], np.ndarray],
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Skirt, cape and ponytail patches. Returns (patch vertex index arrays, pinned rows)."""
    patches: List[np.ndarray] = []
    pinned: List[np.ndarray] = []
    skirt_radius = (
        max(spec.torso_radius, spec.hip_offset + spec.thigh_radius) + spec.skirt_clearance
    )
    pelvis = joints[JOINT_INDEX["pelvis"]]

    columns, rows = spec.skirt_resolution
    if columns:
        angles = 2.0 * np.pi * np.arange(columns) / columns
        heights = pelvis[1] - spec.skirt_length * np.arange(rows) / (rows - 1)
        points = np.stack(
            [
                np.broadcast_to(pelvis[0] + skirt_radius * np.cos(angles), (rows, columns)),
                np.broadcast_to(heights[:, None], (rows, columns)),
                np.broadcast_to(pelvis[2] - skirt_radius * np.sin(angles), (rows, columns)),
            ],
            axis=-1,
        )
        grid = _grid(builder, points)
        builder.add_grid(grid, closed=True)
        body_ring = rings[(JOINT_INDEX["pelvis"], 0)]
        offsets = builder.vertices()[body_ring] - pelvis
        body_angles = np.mod(np.arctan2(-offsets[:, 2], offsets[:, 0]), 2.0 * np.pi)
        order = np.argsort(body_angles, kind="stable")
        builder.add_weld(
            grid[0],
            angles / (2.0 * np.pi),
            body_ring[order],
            body_angles[order] / (2.0 * np.pi),
            closed=True,
        )
        patches.append(grid.reshape(-1))
        pinned.append(grid[0])

    spine3 = joints[JOINT_INDEX["spine3"]]
    columns, rows = spec.cape_resolution
    if columns:
        xs = spine3[0] + spec.cape_width * (np.arange(columns) / (columns - 1) - 0.5)
        heights = spine3[1] - spec.cape_length * np.arange(rows) / (rows - 1)
        depth = pelvis[2] - (skirt_radius + spec.skirt_clearance)
        grid = _grid(builder, _place_patch(xs, heights, depth))
        builder.add_grid(grid, closed=False)
        back, params = _back_run(builder.vertices(), rings[(JOINT_INDEX["spine3"], 0)], spine3)
        builder.add_weld(grid[0], np.linspace(0.0, 1.0, columns), back, params, closed=False)
        patches.append(grid.reshape(-1))
        pinned.append(grid[0])

    columns, rows = spec.ponytail_resolution
    if columns:
        head = JOINT_INDEX["head"]
        ring = rings[(head, 1)] if (head, 1) in rings else rings[(JOINT_INDEX["head_end"], 0)]
        center = builder.vertices()[ring].mean(axis=0)
        xs = center[0] + spec.ponytail_radius * np.linspace(-1.0, 1.0, columns)
        heights = center[1] - spec.ponytail_length * np.arange(rows) / (rows - 1)
        depth = center[2] - (spec.torso_radius + 0.5 * spec.skirt_clearance)
        grid = _grid(builder, _place_patch(xs, heights, depth))
        builder.add_grid(grid, closed=False)
        back, params = _back_run(builder.vertices(), ring, center)
        builder.add_weld(grid[0], np.linspace(0.0, 1.0, columns), back, params, closed=False)
        patches.append(grid.reshape(-1))
        pinned.append(grid[0])
    return patches, pinned


def _place_patch(xs: np.ndarray, heights: np.ndarray, depth: float) -> np.ndarray:
    rows, columns = len(heights), len(xs)
    return np.stack(
        [
            np.broadcast_to(xs[None, :], (rows, columns)),
            np.broadcast_to(heights[:, None], (rows, columns)),
            np.full((rows, columns), depth),
        ],
        axis=-1,
    )


def nearest_two_bones_skinning(
    vertices: np.ndarray, joints: np.ndarray, parents: np.ndarray
) -> np.ndarray:
    """(N, J) weights: each vertex follows the parent joints of its two nearest bones, weighted
    by inverse squared distance."""
    children = np.flatnonzero(parents != ROOT_PARENT)
    bone_joint = parents[children]
    distances = capsule_distances(
        vertices, Capsules(joints[bone_joint], joints[children], np.zeros(len(children)))
    )
    per_joint = np.full((len(vertices), len(joints)), np.inf)
    for column, joint in enumerate(bone_joint):
        per_joint[:, joint] = np.minimum(per_joint[:, joint], distances[:, column])
    nearest = np.argsort(per_joint, axis=1, kind="stable")[:, :2]
    nearest_distance = np.take_along_axis(per_joint, nearest, axis=1)
    inverse = 1.0 / (nearest_distance**2 + SKINNING_EPS)
    inverse[~np.isfinite(nearest_distance)] = 0.0
    weights = np.zeros_like(per_joint)
    np.put_along_axis(weights, nearest, inverse / inverse.sum(axis=1, keepdims=True), axis=1)
    return weights


def generate_character(spec: SynthCharacterSpec, seed: int) -> RiggedCharacter:
    """A jittered humanoid with skirt, cape and ponytail patches welded at their top rows.

    The body mesh comes first in vertex order, then the patches; gt_apparel_mask marks exactly
    the patch vertices.
    """
    if spec.segment_rings < 0:
        raise InvalidSynthSpecException(f"segment_rings must be >= 0, got {spec.segment_rings}")
    rng = np.random.default_rng(seed)
    shape = jittered_spec(spec, rng)
    joints = rest_joints(shape)
    parents = skeleton_parents()
    radii = bone_radii(shape)

    builder = MeshBuilder()
    rings = _build_body(builder, shape, joints, radii)
    num_body = builder.num_vertices
    patches, pinned = _build_apparel(builder, shape, joints, rings)
    vertices = builder.vertices()

    mask = np.zeros(len(vertices), dtype=bool)
    mask[num_body:] = True
    return RiggedCharacter(
        vertices=vertices,
        faces=builder.faces(),
        joints=joints,
        parents=parents,
        gt_skinning=nearest_two_bones_skinning(vertices, joints, parents),
        gt_apparel_mask=mask,
        bone_radii=radii,
        pinned_vertices=np.concatenate(pinned) if pinned else np.zeros(0, dtype=np.int64),
        weld_edges=np.array(sorted(builder.weld_edges), dtype=np.int64).reshape(-1, 2),
    )
