"""Classes for ArtifactWriters. An ArtifactWriter writes scenes, motions, animations, masks,
checkpoints and text reports to somewhere - e.g. the filesystem."""
import abc
from contextlib import contextmanager
import json
import os
from pathlib import Path
from typing import Any, Dict, Generator, Iterable, List

import numpy as np
import toml

from apparelmotion.core.artifact_io import (
    CHECKPOINT_HEADER,
    HEADER_KEY,
    MANIFEST_KEY,
    MOTION_HEADER,
    SCENE_HEADER,
    Checkpoint,
    frame_filename,
)
from apparelmotion.core.json_encoder import json_encoder
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.motion import MotionClip

FLOAT_FORMAT = "%.17g"


class ArtifactWriter(abc.ABC):
    """ArtifactWriters write artifacts to locations - e.g. the filesystem."""

    @abc.abstractmethod
    def write_scene(self, name: str, character: RiggedCharacter) -> Path:
        """Write a scene file"""

    @abc.abstractmethod
    def write_motion(self, name: str, motion: MotionClip) -> Path:
        """Write a motion file"""

    @abc.abstractmethod
    def write_obj_sequence(self, name: str, positions: np.ndarray, faces: np.ndarray) -> Path:
        """Write a directory of numbered OBJ frames"""

    @abc.abstractmethod
    def write_positions(self, name: str, positions: np.ndarray) -> Path:
        """Write a (T, N, 3) animation as compressed npz"""

    @abc.abstractmethod
    def write_mask(self, name: str, mask: np.ndarray) -> Path:
        """Write a 0/1 per line mask file"""

    @abc.abstractmethod
    def write_skinning(self, name: str, weights: np.ndarray, min_weight: float = 0.0) -> Path:
        """Write skinning weights as sparse triplets"""

    @abc.abstractmethod
    def write_checkpoint(self, name: str, checkpoint: Checkpoint) -> Path:
        """Write a checkpoint"""

    @abc.abstractmethod
    def write_toml(self, name: str, data: Dict[str, Any]) -> Path:
        """Write a toml document"""

    @abc.abstractmethod
    def write_text(self, name: str, text: str) -> Path:
        """Write a plain text document"""


class FileArtifactWriter(ArtifactWriter):
    """ArtifactWriter which writes to the filesystem.

    Args:
         output_dir: output filesystem dir, created on first write
    """

    def __init__(self, output_dir: Path):
        self.output_dir = output_dir

    def write_scene(self, name: str, character: RiggedCharacter) -> Path:
        """Write character to self.output_dir/name as a sectioned text document.

        Args:
            name: filename
            character: RiggedCharacter to write

        Returns:
            Full filesystem path of the scene file
        """
        lines = [SCENE_HEADER]
        lines += _section("vertices", _float_lines(character.vertices))
        lines += _section("faces", _int_lines(character.faces))
        lines += _section("joints", _float_lines(character.joints))
        lines += _section("parents", _int_lines(character.parents.reshape(-1, 1)))
        if character.gt_skinning is not None:
            lines += _section("gt_skinning", skinning_triplets(character.gt_skinning))
        if character.gt_apparel_mask is not None:
            lines += _section("gt_apparel_mask", _mask_lines(character.gt_apparel_mask))
        if character.bone_radii is not None:
            lines += _section("bone_radii", _float_lines(character.bone_radii.reshape(-1, 1)))
        if character.pinned_vertices is not None:
            lines += _section(
                "pinned_vertices", _int_lines(character.pinned_vertices.reshape(-1, 1))
            )
        if character.weld_edges is not None:
            lines += _section("weld_edges", _int_lines(character.weld_edges))
        return self.write_text(name, "\n".join(lines) + "\n")

    def write_motion(self, name: str, motion: MotionClip) -> Path:
        """Write motion to self.output_dir/name, one row of J x 12 values per frame.

        Args:
            name: filename
            motion: MotionClip to write

        Returns:
            Full filesystem path of the motion file
        """
        lines = [
            MOTION_HEADER,
            f"fps {FLOAT_FORMAT % motion.fps}",
            f"joints {motion.num_joints}",
            f"frames {motion.num_frames}",
        ]
        if motion.source_bones is not None:
            lines.append("source_bones " + " ".join(FLOAT_FORMAT % b for b in motion.source_bones))
        lines += _float_lines(motion.flattened().reshape(motion.num_frames, -1))
        return self.write_text(name, "\n".join(lines) + "\n")

    def write_obj_sequence(self, name: str, positions: np.ndarray, faces: np.ndarray) -> Path:
        """Write every frame of positions to self.output_dir/name/frame_%04d.obj

        Args:
            name: directory name
            positions: (T, N, 3) vertex positions
            faces: (F, 3) zero-based triangle indices

        Returns:
            Full filesystem path of the frame directory
        """
        logger = Logger()
        sequence_dir = self.output_dir / name
        face_lines = [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(faces)]
        with logger.bind(artifact_path=str(sequence_dir)):
            logger.info(event=LogEvent.WriteToFSStart, num_frames=len(positions))
            os.makedirs(sequence_dir, exist_ok=True)
            for index, frame in enumerate(positions):
                vertex_lines = ["v " + line for line in _float_lines(frame)]
                with open(sequence_dir / frame_filename(index), "w") as fp:
                    fp.write("\n".join(vertex_lines + face_lines) + "\n")
            logger.info(event=LogEvent.WriteToFSEnd)
        return sequence_dir

    def write_positions(self, name: str, positions: np.ndarray) -> Path:
        """Write positions to self.output_dir/name as npz with a single `positions` array"""
        artifact_path = self.output_dir / name
        with _logged_write(artifact_path):
            np.savez_compressed(artifact_path, positions=np.asarray(positions, dtype="<f8"))
        return artifact_path

    def write_mask(self, name: str, mask: np.ndarray) -> Path:
        """Write mask to self.output_dir/name, one 0/1 per line"""
        return self.write_text(name, "\n".join(_mask_lines(mask)) + "\n")

    def write_skinning(self, name: str, weights: np.ndarray, min_weight: float = 0.0) -> Path:
        """Write one `vertex joint weight` line per weight above min_weight"""
        weights = np.where(np.asarray(weights) > min_weight, weights, 0.0)
        return self.write_text(name, "\n".join(skinning_triplets(weights)) + "\n")

    def write_checkpoint(self, name: str, checkpoint: Checkpoint) -> Path:
        """Write checkpoint arrays as little-endian float64 plus header and JSON manifest to
        self.output_dir/name"""
        artifact_path = self.output_dir / name
        payload: Dict[str, np.ndarray] = {
            key: np.asarray(value, dtype="<f8") for key, value in checkpoint.arrays.items()
        }
        payload[HEADER_KEY] = np.array(CHECKPOINT_HEADER)
        payload[MANIFEST_KEY] = np.array(
            json.dumps(checkpoint.manifest, sort_keys=True, default=json_encoder)
        )
        with _logged_write(artifact_path):
            with open(artifact_path, "wb") as fp:
                np.savez(fp, **payload)
        return artifact_path

    def write_toml(self, name: str, data: Dict[str, Any]) -> Path:
        """Write data as a toml document to self.output_dir/name"""
        return self.write_text(name, toml.dumps(json.loads(json.dumps(data, default=json_encoder))))

    def write_text(self, name: str, text: str) -> Path:
        """Write text to self.output_dir/name

        Args:
            name: filename
            text: document content

        Returns:
            Full filesystem path of the written file
        """
        artifact_path = self.output_dir / name
        with _logged_write(artifact_path):
            with open(artifact_path, "w") as fp:
                fp.write(text)
        return artifact_path


@contextmanager
def _logged_write(artifact_path: Path) -> Generator[None, None, None]:
    logger = Logger()
    os.makedirs(artifact_path.parent, exist_ok=True)
    with logger.bind(artifact_path=str(artifact_path)):
        logger.info(event=LogEvent.WriteToFSStart)
        yield
        logger.info(event=LogEvent.WriteToFSEnd)


def skinning_triplets(weights: np.ndarray) -> List[str]:
    """
    >>> skinning_triplets(np.array([[1.0, 0.0], [0.25, 0.75]]))
    ['0 0 1', '1 0 0.25', '1 1 0.75']
    """
    rows, cols = np.nonzero(weights)
    return [f"{row} {col} {FLOAT_FORMAT % weights[row, col]}" for row, col in zip(rows, cols)]


def _section(name: str, rows: List[str]) -> List[str]:
    return [f"[{name}] {len(rows)}"] + rows


def _float_lines(rows: np.ndarray) -> List[str]:
    return [" ".join(FLOAT_FORMAT % value for value in row) for row in np.asarray(rows)]


def _int_lines(rows: np.ndarray) -> List[str]:
    return [" ".join(str(int(value)) for value in row) for row in np.asarray(rows)]


def _mask_lines(mask: Iterable[Any]) -> List[str]:
    return ["1" if flag else "0" for flag in mask]
