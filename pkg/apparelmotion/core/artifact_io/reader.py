"""Classes for ArtifactReaders. An ArtifactReader reads scenes, motions, animations, masks,
checkpoints and manifests from somewhere - e.g. the filesystem."""
import abc
import json
from pathlib import Path
import re
from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import ValidationError
import toml

from apparelmotion.core.artifact_io import (
    CHECKPOINT_HEADER,
    HEADER_KEY,
    MANIFEST_KEY,
    MOTION_HEADER,
    SCENE_HEADER,
    Checkpoint,
)
from apparelmotion.core.artifact_io.exceptions import (
    InvalidAnimationException,
    InvalidCheckpointException,
    InvalidMotionFileException,
    InvalidSceneFileException,
    MissingCheckpointException,
)
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.exceptions import InvalidCharacterException, InvalidMotionException
from apparelmotion.geometry.motion import MotionClip

SECTION_PATTERN = re.compile(r"^\[(\w+)\]\s+(\d+)$")
FRAME_PATTERN = re.compile(r"^frame_(\d+)\.obj$")
PARSE_ERRORS = (KeyError, ValueError, IndexError, ValidationError)
SCENE_ERRORS = PARSE_ERRORS + (InvalidCharacterException,)
MOTION_ERRORS = PARSE_ERRORS + (InvalidMotionException,)


class ArtifactReader(abc.ABC):
    """ArtifactReaders read artifacts from locations - e.g. the filesystem."""

    @abc.abstractmethod
    def read_scene(self, path: Path) -> RiggedCharacter:
        """Read a scene file"""

    @abc.abstractmethod
    def read_motion(self, path: Path) -> MotionClip:
        """Read a motion file"""

    @abc.abstractmethod
    def read_animation(self, path: Path) -> np.ndarray:
        """Read a (T, N, 3) animation from an OBJ frame directory or an npz file"""

    @abc.abstractmethod
    def read_mask(self, path: Path) -> np.ndarray:
        """Read a per-vertex 0/1 mask file"""

    @abc.abstractmethod
    def read_checkpoint(self, path: Path) -> Checkpoint:
        """Read a checkpoint"""

    @abc.abstractmethod
    def read_toml(self, path: Path) -> Dict[str, Any]:
        """Read a toml document such as a corpus manifest"""


class FileArtifactReader(ArtifactReader):
    """ArtifactReader to read from the filesystem"""

    def read_scene(self, path: Path) -> RiggedCharacter:
        """Read a scene file

        Args:
            path: filesystem path to a scene file

        Returns:
            RiggedCharacter
        """
        logger = Logger()
        with logger.bind(artifact_path=str(path)):
            logger.info(event=LogEvent.ReadFromFSStart)
            sections = _parse_sections(_read_lines(path, InvalidSceneFileException), path)
            fields: Dict[str, Any] = {}
            try:
                fields["vertices"] = _float_rows(sections, "vertices", 3)
                fields["faces"] = _int_rows(sections, "faces", 3)
                fields["joints"] = _float_rows(sections, "joints", 3)
                fields["parents"] = _int_rows(sections, "parents", 1).reshape(-1)
                num_vertices, num_joints = len(fields["vertices"]), len(fields["joints"])
                if "gt_skinning" in sections:
                    triplets = np.array(
                        [line.split() for line in sections["gt_skinning"]], dtype=np.float64
                    ).reshape(-1, 3)
                    skinning = np.zeros((num_vertices, num_joints))
                    skinning[triplets[:, 0].astype(np.int64), triplets[:, 1].astype(np.int64)] = (
                        triplets[:, 2]
                    )
                    fields["gt_skinning"] = skinning
                for name in ("gt_apparel_mask", "pinned_vertices"):
                    if name in sections:
                        fields[name] = _int_rows(sections, name, 1).reshape(-1)
                if "bone_radii" in sections:
                    fields["bone_radii"] = _float_rows(sections, "bone_radii", 1).reshape(-1)
                if "weld_edges" in sections:
                    fields["weld_edges"] = _int_rows(sections, "weld_edges", 2)
                character = RiggedCharacter(**fields)
            except SCENE_ERRORS as ex:
                raise InvalidSceneFileException(f"Unable to parse scene {path}: {ex}") from ex
            logger.info(event=LogEvent.ReadFromFSEnd)
            return character

    def read_motion(self, path: Path) -> MotionClip:
        """Read a motion file

        Args:
            path: filesystem path to a motion file

        Returns:
            MotionClip
        """
        logger = Logger()
        with logger.bind(artifact_path=str(path)):
            logger.info(event=LogEvent.ReadFromFSStart)
            lines = _read_lines(path, InvalidMotionFileException)
            if not lines or lines[0] != MOTION_HEADER:
                raise InvalidMotionFileException(f"{path} is missing the header {MOTION_HEADER}")
            header: Dict[str, List[str]] = {}
            rows: List[List[str]] = []
            for line in lines[1:]:
                tokens = line.split()
                if not tokens or tokens[0].startswith("#"):
                    continue
                if tokens[0].isalpha() or "_" in tokens[0]:
                    header[tokens[0]] = tokens[1:]
                else:
                    rows.append(tokens)
            try:
                num_joints = int(header["joints"][0])
                values = np.array(rows, dtype=np.float64).reshape(len(rows), num_joints, 12)
                source_bones = (
                    np.array(header["source_bones"], dtype=np.float64)
                    if "source_bones" in header
                    else None
                )
                motion = MotionClip(
                    rotations=values[:, :, :9].reshape(len(rows), num_joints, 3, 3),
                    translations=values[:, :, 9:],
                    fps=float(header["fps"][0]),
                    source_bones=source_bones,
                )
            except MOTION_ERRORS as ex:
                raise InvalidMotionFileException(f"Unable to parse motion {path}: {ex}") from ex
            logger.info(event=LogEvent.ReadFromFSEnd)
            return motion

    def read_animation(self, path: Path) -> np.ndarray:
        """Read an animation

        Args:
            path: either a directory of frame_%04d.obj files or a .npz holding `positions`

        Returns:
            (T, N, 3) vertex positions
        """
        logger = Logger()
        with logger.bind(artifact_path=str(path)):
            logger.info(event=LogEvent.ReadFromFSStart)
            if path.is_dir():
                frames = sorted(
                    (int(match.group(1)), child)
                    for child in path.iterdir()
                    for match in [FRAME_PATTERN.match(child.name)]
                    if match
                )
                if not frames:
                    raise InvalidAnimationException(f"No frame_*.obj files in {path}")
                positions = np.stack([_read_obj_vertices(child) for _, child in frames])
            elif path.suffix == ".npz":
                with np.load(path, allow_pickle=False) as archive:
                    if "positions" not in archive.files:
                        raise InvalidAnimationException(f"{path} holds no 'positions' array")
                    positions = np.array(archive["positions"], dtype=np.float64)
            else:
                raise InvalidAnimationException(f"{path} is neither a frame directory nor .npz")
            logger.info(event=LogEvent.ReadFromFSEnd, num_frames=len(positions))
            return positions

    def read_mask(self, path: Path) -> np.ndarray:
        """Read a mask file of one 0/1 per line"""
        logger = Logger()
        with logger.bind(artifact_path=str(path)):
            logger.info(event=LogEvent.ReadFromFSStart)
            lines = [line for line in _read_lines(path, InvalidSceneFileException) if line]
            if any(line not in ("0", "1") for line in lines):
                raise InvalidSceneFileException(f"{path} must hold one 0 or 1 per line")
            mask = np.array([line == "1" for line in lines], dtype=bool)
            logger.info(event=LogEvent.ReadFromFSEnd)
            return mask

    def read_checkpoint(self, path: Path) -> Checkpoint:
        """Read a checkpoint written by FileArtifactWriter.write_checkpoint"""
        logger = Logger()
        if not path.exists():
            raise MissingCheckpointException(f"Checkpoint {path} does not exist")
        with logger.bind(artifact_path=str(path)):
            logger.info(event=LogEvent.ReadFromFSStart)
            with np.load(path, allow_pickle=False) as archive:
                if HEADER_KEY not in archive.files or str(archive[HEADER_KEY]) != CHECKPOINT_HEADER:
                    raise InvalidCheckpointException(
                        f"{path} is not a {CHECKPOINT_HEADER} checkpoint"
                    )
                manifest = json.loads(str(archive[MANIFEST_KEY]))
                arrays = {
                    name: np.array(archive[name], dtype=np.float64)
                    for name in archive.files
                    if name not in (HEADER_KEY, MANIFEST_KEY)
                }
            logger.info(event=LogEvent.ReadFromFSEnd)
            return Checkpoint(arrays=arrays, manifest=manifest)

    def read_toml(self, path: Path) -> Dict[str, Any]:
        """Read a toml document"""
        logger = Logger()
        with logger.bind(artifact_path=str(path)):
            logger.info(event=LogEvent.ReadFromFSStart)
            with open(path, "r") as fp:
                data = dict(toml.load(fp))
            logger.info(event=LogEvent.ReadFromFSEnd)
            return data


def _read_lines(path: Path, exception: type) -> List[str]:
    try:
        with open(path, "r") as fp:
            return [line.strip() for line in fp]
    except OSError as ose:
        raise exception(f"Unable to read {path}: {ose}") from ose


def _parse_sections(lines: List[str], path: Path) -> Dict[str, List[str]]:
    if not lines or lines[0] != SCENE_HEADER:
        raise InvalidSceneFileException(f"{path} is missing the header {SCENE_HEADER}")
    content = [line for line in lines[1:] if line and not line.startswith("#")]
    sections: Dict[str, List[str]] = {}
    cursor = 0
    while cursor < len(content):
        match = SECTION_PATTERN.match(content[cursor])
        if not match:
            raise InvalidSceneFileException(
                f"{path}: expected a section header, got '{content[cursor]}'"
            )
        name, count = match.group(1), int(match.group(2))
        body = content[cursor + 1 : cursor + 1 + count]
        if len(body) != count:
            raise InvalidSceneFileException(
                f"{path}: section {name} declares {count} rows, found {len(body)}"
            )
        sections[name] = body
        cursor += 1 + count
    return sections


def _float_rows(sections: Dict[str, List[str]], name: str, width: int) -> np.ndarray:
    return np.array([line.split() for line in sections[name]], dtype=np.float64).reshape(-1, width)


def _int_rows(sections: Dict[str, List[str]], name: str, width: int) -> np.ndarray:
    return np.array([line.split() for line in sections[name]], dtype=np.int64).reshape(-1, width)


def _read_obj_vertices(path: Path) -> np.ndarray:
    vertices: List[Tuple[float, float, float]] = []
    with open(path, "r") as fp:
        for line in fp:
            tokens = line.split()
            if tokens and tokens[0] == "v":
                vertices.append((float(tokens[1]), float(tokens[2]), float(tokens[3])))
    if not vertices:
        raise InvalidAnimationException(f"{path} holds no vertices")
    return np.array(vertices, dtype=np.float64)
