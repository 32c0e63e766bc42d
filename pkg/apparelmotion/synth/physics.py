"""Mass-spring apparel oracle.

Apparel vertices are unit particles joined by Hooke springs along apparel mesh edges and
integrated with damped Verlet steps in frame units (one frame has unit duration, gravity is
meters/frame^2). Every particle carries the same lumped mass 1 + h^2 k d_max, where h is the
substep duration and d_max the largest spring count at a particle, so a step never overshoots
whatever the stiffness. Pinned particles are driven by the skinned body.
"""
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import csgraph

from apparelmotion.core.base_model import BaseMutableModel
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.exceptions import InvalidCharacterException
from apparelmotion.geometry.mesh import edge_lengths, induced_edges, relabel_edges
from apparelmotion.geometry.motion import MotionClip
from apparelmotion.geometry.skinning import (
    Capsules,
    body_capsules,
    capsule_axis_offsets,
    linear_blend_skinning,
    posed_joints,
    push_out_of_capsules,
)
from apparelmotion.synth.exceptions import SpringExplosionException
from apparelmotion.synth.spec import SynthCharacterSpec


# acceleration per meter of penetration in the rest equilibrium solve
CONTACT_STIFFNESS = 1e5
EQUILIBRIUM_TOLERANCE = 1e-11
EQUILIBRIUM_MAX_ITERATIONS = 20000


class SimState(BaseMutableModel):
    """Verlet pair of apparel particle positions."""

    current: np.ndarray
    previous: np.ndarray

    @classmethod
    def at_rest(cls, positions: np.ndarray) -> "SimState":
        positions = np.array(positions, dtype=np.float64)
        return cls(current=positions, previous=positions.copy())

    def stop(self) -> None:
        """Discard the velocity."""
        self.previous = self.current.copy()


class SpringSystem:
    """Springs along apparel edges of a character, in apparel-local vertex indices."""

    def __init__(self, character: RiggedCharacter, spec: SynthCharacterSpec):
        mask = character.apparel_mask_or_empty()
        self.apparel_indices = np.flatnonzero(mask)
        num_apparel = len(self.apparel_indices)
        global_edges = induced_edges(character.edges, mask)
        self.edges = relabel_edges(global_edges, self.apparel_indices, character.num_vertices)
        self.rest_lengths = edge_lengths(character.vertices, global_edges)
        self.stiffness = spec.stiffness
        self.substep = 1.0 / spec.substeps
        degree = np.bincount(self.edges.reshape(-1), minlength=num_apparel)
        max_degree = int(degree.max()) if degree.size else 0
        self.mass = 1.0 + self.substep**2 * spec.stiffness * max_degree
        num_edges = len(self.edges)
        self._incidence = sparse.csr_matrix(
            (
                np.concatenate([-np.ones(num_edges), np.ones(num_edges)]),
                (
                    np.concatenate([np.arange(num_edges), np.arange(num_edges)]),
                    np.concatenate([self.edges[:, 0], self.edges[:, 1]]),
                ),
            ),
            shape=(num_edges, num_apparel),
        )

    def forces(self, positions: np.ndarray) -> np.ndarray:
        """(N_a, 3) spring forces k (|d| - L) d/|d| pulling stretched edges together."""
        if len(self.edges) == 0:
            return np.zeros_like(positions)
        delta = positions[self.edges[:, 1]] - positions[self.edges[:, 0]]
        length = np.linalg.norm(delta, axis=1)
        direction = np.divide(
            delta, length[:, None], out=np.zeros_like(delta), where=length[:, None] > 0
        )
        tension = (self.stiffness * (length - self.rest_lengths))[:, None] * direction
        return -(self._incidence.T @ tension)

    def energy(self, positions: np.ndarray) -> float:
        """Elastic energy sum of k (|d| - L)^2 / 2 over the springs."""
        if len(self.edges) == 0:
            return 0.0
        stretch = edge_lengths(positions, self.edges) - self.rest_lengths
        return float(0.5 * self.stiffness * np.sum(stretch * stretch))

    def anchored(self, pinned: np.ndarray) -> np.ndarray:
        """(N_a,) flags of particles joined to a pinned particle through a chain of springs."""
        num_apparel = len(self.apparel_indices)
        if len(pinned) == 0:
            return np.zeros(num_apparel, dtype=bool)
        adjacency = sparse.coo_matrix(
            (np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])),
            shape=(num_apparel, num_apparel),
        )
        _, labels = csgraph.connected_components(adjacency, directed=False)
        return np.isin(labels, labels[pinned])


def _pinned_local(character: RiggedCharacter, apparel_indices: np.ndarray) -> np.ndarray:
    if character.pinned_vertices is None or len(character.pinned_vertices) == 0:
        return np.zeros(0, dtype=np.int64)
    lookup = np.full(character.num_vertices, -1, dtype=np.int64)
    lookup[apparel_indices] = np.arange(len(apparel_indices))
    local = lookup[character.pinned_vertices]
    if np.any(local < 0):
        raise InvalidCharacterException("pinned vertices must be apparel vertices")
    return local


def _require_skinning(character: RiggedCharacter) -> np.ndarray:
    if character.gt_skinning is None:
        raise InvalidCharacterException("character has no ground truth skinning")
    return character.gt_skinning


def rest_equilibrium(
    system: SpringSystem,
    positions: np.ndarray,
    movable: np.ndarray,
    gravity: np.ndarray,
    capsules: Optional[Capsules] = None,
) -> Tuple[np.ndarray, float]:
    """Move the movable particles to where spring, gravity and body contact accelerations cancel.

    Minimizes elastic energy over the lumped mass, minus the work of gravity, plus a stiff
    penalty on penetration of the capsules, with L-BFGS. Its gradient is minus the Verlet
    acceleration, so a minimum is a resting state of the integrator.

    Returns:
        (N_a, 3) positions and the largest remaining acceleration of a movable particle
    """
    positions = np.array(positions, dtype=np.float64)
    if not np.any(movable):
        return positions, 0.0
    start = positions[movable]

    def energy_and_acceleration(flat: np.ndarray) -> Tuple[float, np.ndarray]:
        x = positions.copy()
        x[movable] = flat.reshape(-1, 3)
        moved = x[movable]
        # gravity work is measured from the start positions
        value = system.energy(x) / system.mass - float(np.sum((moved - start) @ gravity))
        acceleration = system.forces(x)[movable] / system.mass + gravity
        if capsules is not None:
            offsets = capsule_axis_offsets(moved, capsules)
            distance = np.linalg.norm(offsets, axis=-1)
            depth = np.minimum(distance - capsules.radii[None], 0.0)
            normals = np.divide(
                offsets,
                distance[..., None],
                out=np.zeros_like(offsets),
                where=distance[..., None] > 0,
            )
            value += 0.5 * CONTACT_STIFFNESS * float(np.sum(depth * depth))
            acceleration -= CONTACT_STIFFNESS * np.sum(depth[..., None] * normals, axis=1)
        return value, acceleration

    def objective(flat: np.ndarray) -> Tuple[float, np.ndarray]:
        value, acceleration = energy_and_acceleration(flat)
        return value, -acceleration.reshape(-1)

    result = optimize.minimize(
        objective,
        start.reshape(-1),
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": EQUILIBRIUM_MAX_ITERATIONS,
            "maxfun": 2 * EQUILIBRIUM_MAX_ITERATIONS,
            "maxcor": 20,
            "ftol": 0.0,
            "gtol": EQUILIBRIUM_TOLERANCE,
        },
    )
    positions[movable] = result.x.reshape(-1, 3)
    residual = float(np.abs(energy_and_acceleration(result.x)[1]).max())
    return positions, residual


def simulate_apparel(
    character: RiggedCharacter, motion: MotionClip, spec: SynthCharacterSpec
) -> np.ndarray:
    """(T, N_a, 3) apparel positions, in apparel vertex order, driven by motion.

    Frame 0 holds the apparel hanging at the pose of frame 0: solved to rest_equilibrium when
    spec.rest_equilibrium is set, then spec.relax_frames damped settling frames. Frame t follows
    frame t - 1 after spec.substeps Verlet substeps. Pinned vertices equal their skinned positions
    exactly at every frame.
    """
    logger = Logger()
    system = SpringSystem(character, spec)
    apparel = system.apparel_indices
    pinned = _pinned_local(character, apparel)
    free = np.setdiff1d(np.arange(len(apparel)), pinned)
    gravity = np.asarray(spec.gravity, dtype=np.float64)
    h_sq = system.substep**2
    pinned_global = apparel[pinned]
    skinning = _require_skinning(character)[pinned_global] if len(pinned) else None

    def pinned_targets(frame: int) -> np.ndarray:
        if skinning is None:
            return np.zeros((0, 3))
        return linear_blend_skinning(
            character.vertices[pinned_global],
            skinning,
            character.joints,
            motion.rotations[frame],
            motion.translations[frame],
        )

    def substep(
        state: SimState, damping: float, targets: np.ndarray, joint_offsets: np.ndarray
    ) -> None:
        x = state.current
        acceleration = gravity + system.forces(x) / system.mass
        stepped = x + (1.0 - damping) * (x - state.previous) + h_sq * acceleration
        stepped[pinned] = targets
        if spec.pushout and len(free):
            capsules = body_capsules(character, posed_joints(character.joints, joint_offsets))
            stepped[free] = push_out_of_capsules(stepped[free], capsules)
        state.previous, state.current = x, stepped

    def advance(state: SimState, damping: float, start: int, end: int) -> None:
        start_pins, end_pins = pinned_targets(start), pinned_targets(end)
        start_offsets, end_offsets = motion.translations[start], motion.translations[end]
        for step in range(spec.substeps):
            alpha = (step + 1) / spec.substeps
            substep(
                state,
                damping,
                (1.0 - alpha) * start_pins + alpha * end_pins,
                (1.0 - alpha) * start_offsets + alpha * end_offsets,
            )

    with logger.bind(num_apparel=len(apparel), num_frames=motion.num_frames):
        logger.debug(event=LogEvent.SimulateStart)
        frames = np.empty((motion.num_frames, len(apparel), 3))
        state = SimState.at_rest(character.vertices[apparel])
        if len(apparel) == 0:
            logger.debug(event=LogEvent.SimulateEnd)
            return frames
        if spec.rest_equilibrium:
            initial = state.current.copy()
            initial[pinned] = pinned_targets(0)
            capsules = (
                body_capsules(character, posed_joints(character.joints, motion.translations[0]))
                if spec.pushout
                else None
            )
            movable = system.anchored(pinned)
            movable[pinned] = False
            settled, residual = rest_equilibrium(system, initial, movable, gravity, capsules)
            logger.debug(event=LogEvent.SimulateRestEquilibrium, residual=residual)
            state = SimState.at_rest(settled)
        for _ in range(spec.relax_frames):
            advance(state, spec.relax_damping, 0, 0)
        state.current[pinned] = pinned_targets(0)
        state.stop()
        frames[0] = state.current
        height = character.height
        for frame in range(1, motion.num_frames):
            advance(state, spec.damping, frame - 1, frame)
            frames[frame] = state.current
            moved = np.linalg.norm(frames[frame] - frames[frame - 1], axis=1)
            worst = int(np.argmax(np.where(np.isfinite(moved), moved, np.inf)))
            if not np.isfinite(moved[worst]) or moved[worst] > height:
                raise SpringExplosionException(
                    f"apparel vertex {apparel[worst]} moved {moved[worst]:.4g} m at frame {frame}, "
                    f"more than the body height {height:.4g} m (stiffness {spec.stiffness}, "
                    f"substeps {spec.substeps})"
                )
        logger.debug(event=LogEvent.SimulateEnd)
    return frames


def skinned_frames(
    character: RiggedCharacter, motion: MotionClip, vertex_indices: Optional[np.ndarray] = None
) -> np.ndarray:
    """(T, n, 3) positions of the selected vertices skinned with the ground truth weights."""
    skinning = _require_skinning(character)
    if vertex_indices is None:
        vertex_indices = np.arange(character.num_vertices)
    rest = character.vertices[vertex_indices]
    weights = skinning[vertex_indices]
    return np.stack(
        [
            linear_blend_skinning(
                rest, weights, character.joints, motion.rotations[t], motion.translations[t]
            )
            for t in range(motion.num_frames)
        ]
    )


def animate_character(
    character: RiggedCharacter,
    motion: MotionClip,
    spec: SynthCharacterSpec,
    physics: bool = True,
) -> np.ndarray:
    """(T, N, 3) ground truth animation of the whole mesh. The body follows the ground truth
    skinning; apparel comes from simulate_apparel, or from the same skinning when physics is
    False."""
    frames = skinned_frames(character, motion)
    if physics:
        apparel = np.flatnonzero(character.apparel_mask_or_empty())
        frames[:, apparel] = simulate_apparel(character, motion, spec)
    return frames


def kinetic_proxy(frames: np.ndarray) -> np.ndarray:
    """(T,) sum over vertices of the squared displacement since the previous frame; 0 at frame 0.

    >>> kinetic_proxy(np.array([[[0.0, 0.0, 0.0]], [[0.0, 2.0, 0.0]]])).tolist()
    [0.0, 4.0]
    """
    proxy = np.zeros(len(frames))
    if len(frames) > 1:
        proxy[1:] = np.sum((frames[1:] - frames[:-1]) ** 2, axis=(1, 2))
    return proxy
