"""Readers and writers for every on-disk artifact: scenes, motions, animations, masks,
checkpoints, manifests and reports."""
from typing import Any, Dict

import numpy as np

from apparelmotion.core.base_model import BaseImmutableModel

SCENE_HEADER = "# apparelmotion-scene v1"
MOTION_HEADER = "# apparelmotion-motion v1"
CHECKPOINT_HEADER = "apparelmotion-checkpoint-v1"
FRAME_FILENAME = "frame_{:04d}.obj"
HEADER_KEY = "__header__"
MANIFEST_KEY = "__manifest__"


class Checkpoint(BaseImmutableModel):
    """Named float64 arrays plus a JSON-compatible manifest."""

    arrays: Dict[str, np.ndarray]
    manifest: Dict[str, Any]


def frame_filename(index: int) -> str:
    """
    >>> frame_filename(7)
    'frame_0007.obj'
    """
    return FRAME_FILENAME.format(index)
