"""Bone-length retargeting of joint translations."""
import numpy as np

from apparelmotion.geometry.exceptions import JointCountMismatchException
from apparelmotion.geometry.motion import MotionClip


def bone_ratios(source_bones: np.ndarray, target_bones: np.ndarray) -> np.ndarray:
    """Per-joint target/source bone length ratio; a zero-length source bone gives 1.

    >>> bone_ratios(np.array([1.0, 0.0, 2.0]), np.array([2.0, 5.0, 1.0])).tolist()
    [2.0, 1.0, 0.5]
    """
    source_bones = np.asarray(source_bones, dtype=np.float64)
    target_bones = np.asarray(target_bones, dtype=np.float64)
    if source_bones.shape != target_bones.shape:
        raise JointCountMismatchException(
            f"source bones {source_bones.shape} and target bones {target_bones.shape} differ"
        )
    ratios = np.ones_like(source_bones)
    nonzero = source_bones != 0.0
    ratios[nonzero] = target_bones[nonzero] / source_bones[nonzero]
    return ratios


def scale_translations(
    motion: MotionClip, source_bones: np.ndarray, target_bones: np.ndarray
) -> MotionClip:
    """Scale each joint's translations by its target/source bone length ratio."""
    source_bones = np.asarray(source_bones, dtype=np.float64)
    if source_bones.shape != (motion.num_joints,):
        raise JointCountMismatchException(
            f"motion has {motion.num_joints} joints but source bones have shape "
            f"{source_bones.shape}"
        )
    ratios = bone_ratios(source_bones, target_bones)
    scaled = motion.with_translations(motion.translations * ratios[None, :, None])
    return MotionClip(
        rotations=scaled.rotations,
        translations=scaled.translations,
        fps=scaled.fps,
        source_bones=np.asarray(target_bones, dtype=np.float64),
    )
