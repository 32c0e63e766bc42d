"""Random smooth motions on the reference skeleton, blended in from the rest pose."""
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.transform import Rotation

from apparelmotion.geometry.character import ROOT_PARENT, bone_lengths, topological_order
from apparelmotion.geometry.motion import MotionClip
from apparelmotion.synth.skeleton import JOINT_NAMES, NUM_JOINTS, rest_joints, skeleton_parents
from apparelmotion.synth.spec import SynthCharacterSpec

KEY_SPACING = 15
BLEND_FRAMES = 15
ROOT_OFFSET_SCALE = np.array([0.04, 0.015, 0.04])

# radians; joints not listed use DEFAULT_AMPLITUDE
JOINT_AMPLITUDES: Dict[str, float] = {
    "pelvis": 0.12,
    "spine1": 0.1,
    "spine2": 0.1,
    "spine3": 0.1,
    "neck1": 0.15,
    "neck2": 0.15,
    "head": 0.2,
    "l_hip": 0.45,
    "r_hip": 0.45,
    "l_knee": 0.5,
    "r_knee": 0.5,
    "l_ankle": 0.25,
    "r_ankle": 0.25,
    "l_shoulder": 0.6,
    "r_shoulder": 0.6,
    "l_elbow": 0.6,
    "r_elbow": 0.6,
    "l_wrist": 0.3,
    "r_wrist": 0.3,
}
DEFAULT_AMPLITUDE = 0.15


def _key_times(num_frames: int) -> np.ndarray:
    num_keys = max(2, int(np.ceil((num_frames - 1) / KEY_SPACING)) + 1)
    return np.arange(num_keys) * float(KEY_SPACING)


def _blended_spline(keys: np.ndarray, num_frames: int) -> np.ndarray:
    """Sample a spline through keys (keys[0] is zero) at every frame, replacing the first
    BLEND_FRAMES frames by a linear ramp from zero to the spline value at BLEND_FRAMES."""
    times = _key_times(num_frames)
    spline = CubicSpline(times, keys, axis=0)
    frames = np.arange(num_frames, dtype=np.float64)
    values = spline(frames)
    blend_target = spline(float(BLEND_FRAMES))
    ramp = frames <= BLEND_FRAMES
    weights = (frames[ramp] / BLEND_FRAMES).reshape((-1,) + (1,) * (values.ndim - 1))
    values[ramp] = weights * blend_target
    return values


def sample_local_rotvecs(seed: int, num_frames: int) -> np.ndarray:
    """(T, J, 3) local joint rotation vectors: frame 0 is zero and the first BLEND_FRAMES frames
    scale the rotation at BLEND_FRAMES linearly from zero."""
    rng = np.random.default_rng(seed)
    amplitudes = np.array([JOINT_AMPLITUDES.get(name, DEFAULT_AMPLITUDE) for name in JOINT_NAMES])
    num_keys = len(_key_times(num_frames))
    keys = rng.normal(size=(num_keys, NUM_JOINTS, 3)) * amplitudes[None, :, None]
    keys[0] = 0.0
    return _blended_spline(keys, num_frames)


def _sample_root_offsets(seed: int, num_frames: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 1])
    num_keys = len(_key_times(num_frames))
    keys = rng.normal(size=(num_keys, 3)) * ROOT_OFFSET_SCALE
    keys[0] = 0.0
    return _blended_spline(keys, num_frames)


def orthonormalize(rotations: np.ndarray) -> np.ndarray:
    """Project (..., 3, 3) matrices onto the nearest proper rotations."""
    u, _, vt = np.linalg.svd(rotations)
    fix = np.ones(rotations.shape[:-1])
    fix[..., -1] = np.sign(np.linalg.det(u @ vt))
    return (u * fix[..., None, :]) @ vt


def forward_kinematics(
    rest: np.ndarray, parents: np.ndarray, local_rotations: np.ndarray, root_offsets: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """(T, J, 3, 3) global rotations and (T, J, 3) global joint positions of a posed skeleton."""
    num_frames, num_joints = local_rotations.shape[:2]
    global_rotations = np.empty_like(local_rotations)
    positions = np.empty((num_frames, num_joints, 3))
    for joint in topological_order(parents):
        parent = parents[joint]
        if parent == ROOT_PARENT:
            global_rotations[:, joint] = local_rotations[:, joint]
            positions[:, joint] = rest[joint] + root_offsets
            continue
        global_rotations[:, joint] = global_rotations[:, parent] @ local_rotations[:, joint]
        offset = rest[joint] - rest[parent]
        positions[:, joint] = positions[:, parent] + global_rotations[:, parent] @ offset
    return global_rotations, positions


def generate_motion(
    seed: int, length: int, fps: float = 30.0, spec: Optional[SynthCharacterSpec] = None
) -> MotionClip:
    """A MotionClip of `length` frames on the reference skeleton of spec.

    Joint transforms rotate about each rest joint and translate it to its posed position, so
    source_bones records the reference bone lengths for retargeting.
    """
    spec = spec or SynthCharacterSpec()
    rest = rest_joints(spec)
    parents = skeleton_parents()
    rotvecs = sample_local_rotvecs(seed, length)
    local_rotations = Rotation.from_rotvec(rotvecs.reshape(-1, 3)).as_matrix()
    local_rotations = local_rotations.reshape(length, NUM_JOINTS, 3, 3)
    global_rotations, positions = forward_kinematics(
        rest, parents, local_rotations, _sample_root_offsets(seed, length)
    )
    rotations = orthonormalize(global_rotations)
    translations = positions - rest[None]
    rotations[0] = np.eye(3)
    translations[0] = 0.0
    return MotionClip(
        rotations=rotations,
        translations=translations,
        fps=fps,
        source_bones=bone_lengths(rest, parents),
    )
