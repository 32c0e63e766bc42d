import json
import logging
from pathlib import Path
import tempfile
from unittest import TestCase

import numpy as np

from apparelmotion.core.artifact_io.reader import FileArtifactReader
from apparelmotion.core.config import SynthConfig
from apparelmotion.synth.corpus import (
    MANIFEST_FILENAME,
    TEST,
    TRAIN,
    CorpusManifest,
    build_corpus,
    motion_seed,
    retargeted,
)
from apparelmotion.synth.physics import skinned_frames

TINY_SYNTH = SynthConfig(characters=2, motions=2, frames=3, test_characters=1, test_motions=1)


class TestBuildCorpus(TestCase):
    @classmethod
    def setUpClass(cls):
        cls._temp_dir = tempfile.TemporaryDirectory()
        root = Path(cls._temp_dir.name)
        cls.single_dir, cls.pooled_dir = root / "single", root / "pooled"
        cls.manifest = build_corpus(TINY_SYNTH, 5, cls.single_dir, threads=1)
        cls.pooled_manifest = build_corpus(TINY_SYNTH, 5, cls.pooled_dir, threads=3)

    @classmethod
    def tearDownClass(cls):
        cls._temp_dir.cleanup()

    def test_entries_and_splits(self):
        manifest = self.manifest
        self.assertEqual([entry.split for entry in manifest.characters], [TRAIN, TEST])
        self.assertEqual([entry.split for entry in manifest.motions], [TRAIN, TEST])
        self.assertEqual(manifest.motions[1].seed, motion_seed(5, 1))

    def test_samples_pair_within_a_split(self):
        pairs = [
            (sample.character, sample.motion, sample.split) for sample in self.manifest.samples
        ]
        self.assertEqual(sorted(pairs), [(0, 0, TRAIN), (1, 1, TEST)])
        self.assertEqual(len(self.manifest.samples_in(TEST)), 1)

    def test_manifest_round_trip(self):
        loaded = CorpusManifest.from_path(self.single_dir / MANIFEST_FILENAME)
        self.assertEqual(loaded, self.manifest)

    def test_thread_count_does_not_change_files(self):
        self.assertEqual(self.pooled_manifest, self.manifest)
        for entry in self.manifest.characters + self.manifest.motions:
            self.assertEqual(
                (self.single_dir / entry.path).read_bytes(),
                (self.pooled_dir / entry.path).read_bytes(),
            )
        reader = FileArtifactReader()
        for sample in self.manifest.samples:
            for name in (sample.gt, sample.gt_nophysics):
                np.testing.assert_array_equal(
                    reader.read_animation(self.single_dir / name),
                    reader.read_animation(self.pooled_dir / name),
                )

    def test_ground_truth_without_physics_is_skinning(self):
        reader = FileArtifactReader()
        sample = self.manifest.samples[0]
        character = reader.read_scene(self.single_dir / self.manifest.characters[0].path)
        motion = reader.read_motion(self.single_dir / self.manifest.motions[0].path)
        animation = reader.read_animation(self.single_dir / sample.gt_nophysics)
        self.assertEqual(animation.shape, (TINY_SYNTH.frames, character.num_vertices, 3))
        np.testing.assert_allclose(
            animation, skinned_frames(character, retargeted(character, motion)), atol=1e-9
        )

    def test_physics_ground_truth_differs_on_apparel_only(self):
        reader = FileArtifactReader()
        sample = self.manifest.samples[0]
        character = reader.read_scene(self.single_dir / self.manifest.characters[0].path)
        with_physics = reader.read_animation(self.single_dir / sample.gt)
        without_physics = reader.read_animation(self.single_dir / sample.gt_nophysics)
        body = ~character.gt_apparel_mask
        np.testing.assert_array_equal(with_physics[:, body], without_physics[:, body])
        self.assertFalse(
            np.allclose(with_physics[:, ~body], without_physics[:, ~body], atol=1e-6)
        )


def test_build_logs_progress(caplog, tmp_path):
    caplog.set_level(logging.DEBUG)
    synth = SynthConfig(characters=2, motions=2, frames=2, test_characters=1, test_motions=1)
    build_corpus(synth, 1, tmp_path, threads=2)
    records = [json.loads(record.message) for record in caplog.records]
    events = [record["event"] for record in records]
    assert events.index("CorpusBuildStart") < events.index("CorpusBuildEnd")
    assert events.count("CorpusSampleEnd") == 2
    end = records[events.index("CorpusBuildEnd")]
    assert end["num_samples"] == 2
    assert end["seed"] == 1
