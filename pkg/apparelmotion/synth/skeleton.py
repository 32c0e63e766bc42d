"""The 40-joint humanoid skeleton shared by generated characters and motions."""
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from apparelmotion.geometry.character import ROOT_PARENT
from apparelmotion.synth.spec import SynthCharacterSpec


class Chain(NamedTuple):
    """A run of joints swept by one tube. `attach` is the joint whose ring the tube start is
    stitched to, ROOT_PARENT for the chain holding the root."""

    name: str
    joints: Tuple[int, ...]
    attach: int


JOINT_NAMES: Tuple[str, ...] = (
    "pelvis", "spine1", "spine2", "spine3", "neck1", "neck2", "head", "head_end",
    "l_hip", "l_knee", "l_ankle", "l_foot", "l_toe",
    "r_hip", "r_knee", "r_ankle", "r_foot", "r_toe",
    "l_clavicle", "l_shoulder", "l_elbow", "l_wrist", "l_hand",
    "l_middle1", "l_middle2", "l_middle3",
    "r_clavicle", "r_shoulder", "r_elbow", "r_wrist", "r_hand",
    "r_middle1", "r_middle2", "r_middle3",
    "l_thumb1", "l_thumb2", "l_thumb3",
    "r_thumb1", "r_thumb2", "r_thumb3",
)  # fmt: skip

JOINT_INDEX: Dict[str, int] = {name: index for index, name in enumerate(JOINT_NAMES)}
NUM_JOINTS = len(JOINT_NAMES)


CHAINS: Tuple[Chain, ...] = tuple(
    Chain(name, tuple(JOINT_INDEX[joint] for joint in joints), attach)
    for name, joints, attach in (
        ("spine", JOINT_NAMES[0:8], ROOT_PARENT),
        ("l_leg", JOINT_NAMES[8:13], JOINT_INDEX["pelvis"]),
        ("r_leg", JOINT_NAMES[13:18], JOINT_INDEX["pelvis"]),
        ("l_arm", JOINT_NAMES[18:26], JOINT_INDEX["spine3"]),
        ("r_arm", JOINT_NAMES[26:34], JOINT_INDEX["spine3"]),
        ("l_thumb", JOINT_NAMES[34:37], JOINT_INDEX["l_hand"]),
        ("r_thumb", JOINT_NAMES[37:40], JOINT_INDEX["r_hand"]),
    )
)


def skeleton_parents() -> np.ndarray:
    """Parent index per joint: the previous joint of its chain, or the chain attachment."""
    parents = np.full(NUM_JOINTS, ROOT_PARENT, dtype=np.int64)
    for chain in CHAINS:
        for position, joint in enumerate(chain.joints):
            if position == 0:
                parents[joint] = chain.attach
            else:
                parents[joint] = chain.joints[position - 1]
    return parents


def _side_offsets(spec: SynthCharacterSpec, sign: float) -> List[Tuple[str, np.ndarray]]:
    side = "l" if sign > 0 else "r"
    hand, finger, thumb = spec.hand_length, spec.finger_length, spec.thumb_length
    return [
        (f"{side}_hip", np.array([sign * spec.hip_offset, 0.0, 0.0])),
        (f"{side}_knee", np.array([0.0, -spec.thigh_length, 0.0])),
        (f"{side}_ankle", np.array([0.0, -spec.shin_length, 0.0])),
        (f"{side}_foot", np.array([0.0, -0.6 * spec.ankle_height, 0.6 * spec.foot_length])),
        (f"{side}_toe", np.array([0.0, 0.0, 0.4 * spec.foot_length])),
        (f"{side}_clavicle", np.array([sign * 0.03, 0.2 * spec.spine_length, 0.0])),
        (f"{side}_shoulder", np.array([sign * spec.clavicle_length, 0.0, 0.0])),
        (f"{side}_elbow", np.array([sign * spec.upper_arm_length, 0.0, 0.0])),
        (f"{side}_wrist", np.array([sign * spec.forearm_length, 0.0, 0.0])),
        (f"{side}_hand", np.array([sign * hand, 0.0, 0.0])),
        (f"{side}_middle1", np.array([sign * finger / 3.0, 0.0, 0.0])),
        (f"{side}_middle2", np.array([sign * finger / 3.0, 0.0, 0.0])),
        (f"{side}_middle3", np.array([sign * finger / 3.0, 0.0, 0.0])),
        (f"{side}_thumb1", np.array([-sign * 0.4 * hand, 0.0, 0.025])),
        (f"{side}_thumb2", np.array([sign * 0.35 * thumb, 0.0, 0.35 * thumb])),
        (f"{side}_thumb3", np.array([sign * 0.35 * thumb, 0.0, 0.35 * thumb])),
    ]


def rest_joints(spec: SynthCharacterSpec) -> np.ndarray:
    """(J, 3) T-pose joint positions; y is up, the character faces +z and its left is +x."""
    quarter_spine = spec.spine_length / 4.0
    offsets: Dict[str, np.ndarray] = {
        "spine1": np.array([0.0, quarter_spine, 0.0]),
        "spine2": np.array([0.0, quarter_spine, 0.0]),
        "spine3": np.array([0.0, quarter_spine, 0.0]),
        "neck1": np.array([0.0, quarter_spine, 0.0]),
        "neck2": np.array([0.0, spec.neck_length, 0.0]),
        "head": np.array([0.0, 0.25 * spec.head_length, 0.0]),
        "head_end": np.array([0.0, 0.75 * spec.head_length, 0.0]),
    }
    for sign in (1.0, -1.0):
        offsets.update(_side_offsets(spec, sign))
    parents = skeleton_parents()
    joints = np.zeros((NUM_JOINTS, 3))
    joints[JOINT_INDEX["pelvis"]] = [
        0.0,
        spec.ankle_height + spec.shin_length + spec.thigh_length,
        0.0,
    ]
    for chain in CHAINS:
        for joint in chain.joints:
            if parents[joint] != ROOT_PARENT:
                joints[joint] = joints[parents[joint]] + offsets[JOINT_NAMES[joint]]
    return joints


def bone_radii(spec: SynthCharacterSpec) -> np.ndarray:
    """Capsule radius of the bone ending at each joint (the root holds the pelvis sphere)."""
    by_name: Dict[str, float] = {
        "pelvis": spec.torso_radius,
        "spine1": spec.torso_radius,
        "spine2": spec.torso_radius,
        "spine3": spec.torso_radius,
        "neck1": spec.torso_radius,
        "neck2": spec.neck_radius,
        "head": spec.neck_radius,
        "head_end": spec.head_radius,
    }
    for side in ("l", "r"):
        by_name.update(
            {
                f"{side}_hip": spec.thigh_radius,
                f"{side}_knee": spec.thigh_radius,
                f"{side}_ankle": spec.shin_radius,
                f"{side}_foot": spec.foot_radius,
                f"{side}_toe": spec.foot_radius,
                f"{side}_clavicle": spec.upper_arm_radius,
                f"{side}_shoulder": spec.upper_arm_radius,
                f"{side}_elbow": spec.upper_arm_radius,
                f"{side}_wrist": spec.forearm_radius,
                f"{side}_hand": spec.hand_radius,
                f"{side}_middle1": spec.finger_radius,
                f"{side}_middle2": spec.finger_radius,
                f"{side}_middle3": spec.finger_radius,
                f"{side}_thumb1": spec.finger_radius,
                f"{side}_thumb2": spec.finger_radius,
                f"{side}_thumb3": spec.finger_radius,
            }
        )
    return np.array([by_name[name] for name in JOINT_NAMES])


def jittered_spec(spec: SynthCharacterSpec, rng: np.random.Generator) -> SynthCharacterSpec:
    """Scale every length and radius of spec by its own factor in [1 - jitter, 1 + jitter]."""
    fields = spec.dict()
    for key in sorted(fields):
        if key.endswith("_length") or key.endswith("_radius") or key in (
            "hip_offset",
            "ankle_height",
        ):
            fields[key] = fields[key] * (1.0 + spec.jitter * rng.uniform(-1.0, 1.0))
    return SynthCharacterSpec(**fields)
