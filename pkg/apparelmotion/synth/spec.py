"""SynthCharacterSpec describes the procedural characters built by the generator.

All lengths are meters, gravity is meters/frame^2 and stiffness is in frame units (a spring
stretched by one meter accelerates its end points by `stiffness` meters/frame^2 before the
lumped-mass preconditioning of the oracle)."""
from typing import Tuple

from pydantic import validator

from apparelmotion.core.base_model import BaseImmutableModel
from apparelmotion.synth.exceptions import InvalidSynthSpecException


class SynthCharacterSpec(BaseImmutableModel):
    """Dimensions, apparel patches and physical parameters of a synthetic character.

    Patch resolutions are (columns, rows); a zero column count disables the patch.
    """

    hip_offset: float = 0.09
    spine_length: float = 0.48
    neck_length: float = 0.1
    head_length: float = 0.22
    clavicle_length: float = 0.15
    upper_arm_length: float = 0.28
    forearm_length: float = 0.25
    hand_length: float = 0.08
    finger_length: float = 0.08
    thumb_length: float = 0.06
    thigh_length: float = 0.42
    shin_length: float = 0.4
    ankle_height: float = 0.08
    foot_length: float = 0.14

    torso_radius: float = 0.13
    neck_radius: float = 0.05
    head_radius: float = 0.1
    upper_arm_radius: float = 0.045
    forearm_radius: float = 0.04
    hand_radius: float = 0.03
    finger_radius: float = 0.013
    thigh_radius: float = 0.07
    shin_radius: float = 0.05
    foot_radius: float = 0.04

    ring_resolution: int = 8
    segment_rings: int = 1
    jitter: float = 0.08

    skirt_resolution: Tuple[int, int] = (16, 7)
    skirt_length: float = 0.42
    skirt_clearance: float = 0.05
    cape_resolution: Tuple[int, int] = (6, 8)
    cape_width: float = 0.3
    cape_length: float = 0.6
    ponytail_resolution: Tuple[int, int] = (4, 6)
    ponytail_length: float = 0.2
    ponytail_radius: float = 0.025

    stiffness: float = 40.0
    damping: float = 0.02
    gravity: Tuple[float, float, float] = (0.0, -9.81 / 900.0, 0.0)
    substeps: int = 4
    pushout: bool = True
    rest_equilibrium: bool = True
    relax_frames: int = 30
    relax_damping: float = 0.5

    # pylint: disable=no-self-argument
    @validator("stiffness")
    def stiffness_positive(cls, stiffness: float) -> float:
        if stiffness <= 0:
            raise InvalidSynthSpecException(f"stiffness must be > 0, got {stiffness}")
        return stiffness

    @validator("damping", "relax_damping")
    def damping_in_unit_interval(cls, damping: float) -> float:
        if not 0.0 <= damping < 1.0:
            raise InvalidSynthSpecException(f"damping must be in [0, 1), got {damping}")
        return damping

    @validator("substeps", "ring_resolution")
    def at_least_one(cls, value: int) -> int:
        if value < 1:
            raise InvalidSynthSpecException(f"expected a positive count, got {value}")
        return value

    @validator("skirt_resolution", "cape_resolution", "ponytail_resolution")
    def patch_resolution(cls, resolution: Tuple[int, int]) -> Tuple[int, int]:
        columns, rows = resolution
        if columns < 0 or rows < 0 or (columns > 0 and (columns < 2 or rows < 2)):
            raise InvalidSynthSpecException(f"invalid patch resolution {resolution}")
        return resolution
