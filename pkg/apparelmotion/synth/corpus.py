"""Build a synthetic corpus of characters, motions and ground truth animations on disk."""
from concurrent.futures import Future, ThreadPoolExecutor, as_completed
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import Field
import toml

from apparelmotion.core.artifact_io.reader import FileArtifactReader
from apparelmotion.core.artifact_io.writer import FileArtifactWriter
from apparelmotion.core.base_model import BaseImmutableModel
from apparelmotion.core.config import RuntimeSettings, SynthConfig
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.motion import MotionClip
from apparelmotion.geometry.retarget import scale_translations
from apparelmotion.synth.character import generate_character
from apparelmotion.synth.motion import generate_motion
from apparelmotion.synth.physics import animate_character

MANIFEST_FILENAME = "manifest.toml"
SEED_STRIDE = 10007
MOTION_SEED_OFFSET = 5003
TRAIN = "train"
TEST = "test"


class CorpusEntry(BaseImmutableModel):
    """A generated character or motion and the seed that reproduces it."""

    index: int
    seed: int
    path: str
    split: str


class CorpusSample(BaseImmutableModel):
    """Ground truth animations of one character performing one motion."""

    character: int
    motion: int
    gt: str
    gt_nophysics: str
    split: str


class CorpusManifest(BaseImmutableModel):
    """Everything needed to find and regenerate a corpus; paths are relative to its directory."""

    seed: int
    synth: SynthConfig
    characters: List[CorpusEntry] = Field(default_factory=list)
    motions: List[CorpusEntry] = Field(default_factory=list)
    samples: List[CorpusSample] = Field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(self.json())

    @classmethod
    def from_path(cls, path: Path) -> "CorpusManifest":
        return cls(**FileArtifactReader().read_toml(path))

    def samples_in(self, split: str) -> List[CorpusSample]:
        return [sample for sample in self.samples if sample.split == split]


def character_seed(seed: int, index: int) -> int:
    """
    >>> character_seed(1, 2)
    10009
    """
    return seed * SEED_STRIDE + index


def motion_seed(seed: int, index: int) -> int:
    return seed * SEED_STRIDE + MOTION_SEED_OFFSET + index


def split_of(index: int, count: int, held_out: int) -> str:
    """The last `held_out` of `count` items are test items.

    >>> [split_of(i, 4, 1) for i in range(4)]
    ['train', 'train', 'train', 'test']
    """
    return TEST if index >= count - held_out else TRAIN


def retargeted(character: RiggedCharacter, motion: MotionClip) -> MotionClip:
    """motion with its translations scaled onto the bones of character."""
    if motion.source_bones is None:
        return motion
    return scale_translations(motion, motion.source_bones, character.bone_lengths())


def _simulate_sample(
    character: RiggedCharacter, motion: MotionClip, synth: SynthConfig
) -> Tuple[np.ndarray, np.ndarray]:
    driven = retargeted(character, motion)
    return (
        animate_character(character, driven, synth.character, physics=True),
        animate_character(character, driven, synth.character, physics=False),
    )


def build_corpus(
    synth: SynthConfig, seed: int, out_dir: Path, threads: Optional[int] = None
) -> CorpusManifest:
    """Generate synth.characters characters and synth.motions motions and simulate every
    (train character, train motion) and (test character, test motion) pair.

    Simulations run on a pool of `threads` workers (APPARELMOTION_THREADS by default). Every file
    depends only on its own seeds, so the corpus is identical for any thread count.
    """
    logger = Logger()
    threads = threads or RuntimeSettings().threads
    writer = FileArtifactWriter(out_dir)
    with logger.bind(out_dir=str(out_dir), seed=seed, num_threads=threads):
        logger.info(
            event=LogEvent.CorpusBuildStart,
            num_characters=synth.characters,
            num_motions=synth.motions,
            num_frames=synth.frames,
        )
        characters: List[RiggedCharacter] = []
        character_entries: List[CorpusEntry] = []
        for index in range(synth.characters):
            entry = CorpusEntry(
                index=index,
                seed=character_seed(seed, index),
                path=f"characters/char_{index:03d}.scene",
                split=split_of(index, synth.characters, synth.test_characters),
            )
            character = generate_character(synth.character, entry.seed)
            writer.write_scene(entry.path, character)
            characters.append(character)
            character_entries.append(entry)
        motions: List[MotionClip] = []
        motion_entries: List[CorpusEntry] = []
        for index in range(synth.motions):
            entry = CorpusEntry(
                index=index,
                seed=motion_seed(seed, index),
                path=f"motions/motion_{index:03d}.motion",
                split=split_of(index, synth.motions, synth.test_motions),
            )
            motion = generate_motion(entry.seed, synth.frames, synth.fps, synth.character)
            writer.write_motion(entry.path, motion)
            motions.append(motion)
            motion_entries.append(entry)

        samples: List[CorpusSample] = []
        for character_entry in character_entries:
            for motion_entry in motion_entries:
                if character_entry.split != motion_entry.split:
                    continue
                name = f"char_{character_entry.index:03d}_motion_{motion_entry.index:03d}.npz"
                samples.append(
                    CorpusSample(
                        character=character_entry.index,
                        motion=motion_entry.index,
                        gt=f"gt/{name}",
                        gt_nophysics=f"gt_nophysics/{name}",
                        split=character_entry.split,
                    )
                )

        with ThreadPoolExecutor(max_workers=threads) as executor:
            futures: Dict[Future, CorpusSample] = {}
            for sample in samples:
                future = executor.submit(
                    _simulate_sample, characters[sample.character], motions[sample.motion], synth
                )
                futures[future] = sample
                logger.debug(
                    event=LogEvent.CorpusQueueSample,
                    character=sample.character,
                    motion=sample.motion,
                )
            for num_done, future in enumerate(as_completed(futures), start=1):
                sample = futures[future]
                with_physics, without_physics = future.result()
                writer.write_positions(sample.gt, with_physics)
                writer.write_positions(sample.gt_nophysics, without_physics)
                logger.info(
                    event=LogEvent.CorpusSampleEnd,
                    character=sample.character,
                    motion=sample.motion,
                    num_done=num_done,
                    num_total=len(samples),
                )

        manifest = CorpusManifest(
            seed=seed,
            synth=synth,
            characters=character_entries,
            motions=motion_entries,
            samples=samples,
        )
        writer.write_text(MANIFEST_FILENAME, toml.dumps(manifest.to_dict()))
        logger.info(event=LogEvent.CorpusBuildEnd, num_samples=len(samples))
    return manifest
