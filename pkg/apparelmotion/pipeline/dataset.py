"""Lazy access to a corpus written by build_corpus."""
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np

from apparelmotion.core.artifact_io.reader import ArtifactReader, FileArtifactReader
from apparelmotion.core.config import RuntimeSettings
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.geodesic import GeodesicMatrix, compute_geodesic_matrix
from apparelmotion.geometry.motion import MotionClip
from apparelmotion.pipeline.exceptions import EmptySplitException
from apparelmotion.synth.corpus import (
    MANIFEST_FILENAME,
    TRAIN,
    CorpusManifest,
    CorpusSample,
    retargeted,
)


class SampleData(NamedTuple):
    """One character performing one motion retargeted onto it, with (T, N, 3) ground truth."""

    sample: CorpusSample
    character: RiggedCharacter
    motion: MotionClip
    ground_truth: np.ndarray


class Corpus:
    """A corpus directory. Characters, retargeted motions and geodesic matrices are read or
    computed once and cached; only the most recently used ground truth animations are kept.

    Args:
        root: corpus directory holding manifest.toml
        reader: ArtifactReader, a FileArtifactReader by default
        animation_cache: number of animations kept in memory, RuntimeSettings by default
    """

    def __init__(
        self,
        root: Path,
        reader: Optional[ArtifactReader] = None,
        animation_cache: Optional[int] = None,
    ):
        self.root = root
        self.reader = reader or FileArtifactReader()
        self.manifest = CorpusManifest(**self.reader.read_toml(root / MANIFEST_FILENAME))
        self._characters: Dict[int, RiggedCharacter] = {}
        self._motions: Dict[int, MotionClip] = {}
        self._geodesics: Dict[int, GeodesicMatrix] = {}
        if animation_cache is None:
            animation_cache = RuntimeSettings().animation_cache
        self._animation: Callable[[str], np.ndarray] = lru_cache(maxsize=animation_cache)(
            self._read_animation
        )

    def character(self, index: int) -> RiggedCharacter:
        if index not in self._characters:
            entry = self.manifest.characters[index]
            self._characters[index] = self.reader.read_scene(self.root / entry.path)
        return self._characters[index]

    def motion(self, index: int) -> MotionClip:
        """The reference motion as stored, before retargeting."""
        if index not in self._motions:
            entry = self.manifest.motions[index]
            self._motions[index] = self.reader.read_motion(self.root / entry.path)
        return self._motions[index]

    def body_geodesic(self, index: int) -> GeodesicMatrix:
        """Geodesic matrix over the ground truth body vertices of a character."""
        if index not in self._geodesics:
            character = self.character(index)
            self._geodesics[index] = compute_geodesic_matrix(
                character, ~character.apparel_mask_or_empty()
            )
        return self._geodesics[index]

    def animation(self, path: str) -> np.ndarray:
        return self._animation(path)

    def _read_animation(self, path: str) -> np.ndarray:
        return self.reader.read_animation(self.root / path)

    def samples(self, split: str = TRAIN, limit: Optional[int] = None) -> List[CorpusSample]:
        samples = self.manifest.samples_in(split)
        if not samples:
            raise EmptySplitException(f"corpus {self.root} holds no {split} samples")
        return samples[:limit] if limit is not None else samples

    def character_indices(self, split: str = TRAIN) -> List[int]:
        return sorted({sample.character for sample in self.samples(split)})

    def load(self, sample: CorpusSample, physics: bool = True) -> SampleData:
        character = self.character(sample.character)
        path = sample.gt if physics else sample.gt_nophysics
        return SampleData(
            sample=sample,
            character=character,
            motion=retargeted(character, self.motion(sample.motion)),
            ground_truth=self.animation(path),
        )
