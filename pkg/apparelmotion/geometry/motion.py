"""Per-frame joint transforms."""
from typing import Any, Dict, Optional

import numpy as np
from pydantic import root_validator, validator

from apparelmotion.core.base_model import BaseImmutableModel, frozen_array
from apparelmotion.geometry.exceptions import InvalidMotionException

ORTHONORMAL_TOLERANCE = 1e-6
REST_TOLERANCE = 1e-12


class JointTransforms(BaseImmutableModel):
    """Global rotation and translation of every joint for one frame.

    Rotations act about each joint's rest position; translations are added after rotation.
    """

    rotations: np.ndarray
    translations: np.ndarray

    # pylint: disable=no-self-argument
    @validator("rotations", "translations", pre=True)
    def as_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value)

    @root_validator(skip_on_failure=True)
    def shapes(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        rotations, translations = values["rotations"], values["translations"]
        if rotations.ndim != 3 or rotations.shape[1:] != (3, 3):
            raise InvalidMotionException(f"rotations must be (J, 3, 3), got {rotations.shape}")
        if translations.shape != (len(rotations), 3):
            raise InvalidMotionException(
                f"translations shape {translations.shape} does not match {(len(rotations), 3)}"
            )
        return values

    @property
    def num_joints(self) -> int:
        return len(self.rotations)

    def flatten(self) -> np.ndarray:
        """(J, 12) rows of 9 rotation entries followed by 3 translation entries."""
        return np.concatenate(
            [self.rotations.reshape(self.num_joints, 9), self.translations], axis=1
        )


class MotionClip(BaseImmutableModel):
    """A sequence of JointTransforms starting from the rest pose.

    Args:
        rotations: (T, J, 3, 3) global joint rotations
        translations: (T, J, 3) global joint translations
        fps: frames per second
        source_bones: optional (J,) bone lengths of the skeleton the motion was captured on
    """

    rotations: np.ndarray
    translations: np.ndarray
    fps: float = 30.0
    source_bones: Optional[np.ndarray] = None

    # pylint: disable=no-self-argument
    @validator("rotations", "translations", pre=True)
    def as_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value)

    @validator("source_bones", pre=True)
    def optional_array(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        return frozen_array(value).reshape(-1)

    @validator("fps")
    def positive_fps(cls, fps: float) -> float:
        if fps <= 0:
            raise InvalidMotionException(f"fps must be positive, got {fps}")
        return fps

    @root_validator(skip_on_failure=True)
    def valid_frames(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        rotations, translations = values["rotations"], values["translations"]
        if rotations.ndim != 4 or rotations.shape[2:] != (3, 3) or len(rotations) < 1:
            raise InvalidMotionException(f"rotations must be (T, J, 3, 3), got {rotations.shape}")
        num_frames, num_joints = rotations.shape[:2]
        if translations.shape != (num_frames, num_joints, 3):
            raise InvalidMotionException(
                f"translations shape {translations.shape} does not match "
                f"{(num_frames, num_joints, 3)}"
            )
        if not (np.all(np.isfinite(rotations)) and np.all(np.isfinite(translations))):
            raise InvalidMotionException("motion contains non-finite values")
        gram = np.einsum("tjki,tjkl->tjil", rotations, rotations)
        gram_error = np.abs(gram - np.eye(3)).max(axis=(2, 3))
        det_error = np.abs(np.linalg.det(rotations) - 1.0)
        bad = np.argwhere(
            (gram_error > ORTHONORMAL_TOLERANCE) | (det_error > ORTHONORMAL_TOLERANCE)
        )
        if len(bad):
            frame, joint = bad[0]
            raise InvalidMotionException(
                f"rotation of joint {joint} at frame {frame} is not a proper rotation "
                f"(orthonormality error {gram_error[frame, joint]:.3g}, "
                f"determinant error {det_error[frame, joint]:.3g})"
            )
        if (
            np.abs(rotations[0] - np.eye(3)).max() > REST_TOLERANCE
            or np.abs(translations[0]).max() > REST_TOLERANCE
        ):
            raise InvalidMotionException("frame 0 must be the rest pose")
        source_bones = values.get("source_bones")
        if source_bones is not None and source_bones.shape != (num_joints,):
            raise InvalidMotionException(
                f"source_bones shape {source_bones.shape} does not match {(num_joints,)}"
            )
        return values

    @classmethod
    def rest(cls, num_joints: int, num_frames: int, fps: float = 30.0) -> "MotionClip":
        """A motion holding the rest pose for num_frames frames."""
        return cls(
            rotations=np.broadcast_to(np.eye(3), (num_frames, num_joints, 3, 3)),
            translations=np.zeros((num_frames, num_joints, 3)),
            fps=fps,
        )

    @property
    def num_frames(self) -> int:
        return len(self.rotations)

    @property
    def num_joints(self) -> int:
        return self.rotations.shape[1]

    def frame(self, index: int) -> JointTransforms:
        return JointTransforms(
            rotations=self.rotations[index], translations=self.translations[index]
        )

    def flattened(self) -> np.ndarray:
        """(T, J, 12) per-frame rows as in JointTransforms.flatten."""
        return np.concatenate(
            [self.rotations.reshape(self.num_frames, self.num_joints, 9), self.translations],
            axis=2,
        )

    def with_translations(self, translations: np.ndarray) -> "MotionClip":
        return MotionClip(
            rotations=self.rotations,
            translations=translations,
            fps=self.fps,
            source_bones=self.source_bones,
        )
