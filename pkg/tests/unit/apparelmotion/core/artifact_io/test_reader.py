import tempfile
import unittest
from pathlib import Path

import numpy as np

from apparelmotion.core.artifact_io import SCENE_HEADER, Checkpoint
from apparelmotion.core.artifact_io.exceptions import (
    InvalidAnimationException,
    InvalidCheckpointException,
    InvalidMotionFileException,
    InvalidSceneFileException,
    MissingCheckpointException,
)
from apparelmotion.core.artifact_io.reader import FileArtifactReader
from apparelmotion.core.artifact_io.writer import FileArtifactWriter
from tests.meshutil import random_motion, tube_character

MINIMAL_SCENE = """# apparelmotion-scene v1
# a tetrahedron with a single joint
[vertices] 4
0 0 0
1 0 0
0 1 0
0 0 1
[faces] 4
0 1 2
0 1 3
0 2 3
1 2 3
[joints] 1
0 0 0
[parents] 1
-1
"""


class TestFileArtifactReader(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)
        self.reader = FileArtifactReader()
        self.writer = FileArtifactWriter(self.root)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_minimal_scene(self):
        path = self.root / "tet.scene"
        path.write_text(MINIMAL_SCENE)
        character = self.reader.read_scene(path)
        self.assertEqual(character.num_vertices, 4)
        self.assertEqual(character.num_joints, 1)
        self.assertIsNone(character.gt_skinning)
        self.assertEqual(len(character.edges), 6)

    def test_scene_round_trip(self):
        character = tube_character()
        read = self.reader.read_scene(self.writer.write_scene("tube.scene", character))
        np.testing.assert_array_equal(read.vertices, character.vertices)
        np.testing.assert_array_equal(read.faces, character.faces)
        np.testing.assert_array_equal(read.parents, character.parents)
        np.testing.assert_array_equal(read.gt_skinning, character.gt_skinning)
        np.testing.assert_array_equal(read.gt_apparel_mask, character.gt_apparel_mask)
        np.testing.assert_array_equal(read.pinned_vertices, character.pinned_vertices)
        np.testing.assert_array_equal(read.bone_radii, character.bone_radii)

    def test_scene_without_header(self):
        path = self.root / "bad.scene"
        path.write_text(MINIMAL_SCENE.replace(SCENE_HEADER, "# something else"))
        with self.assertRaises(InvalidSceneFileException):
            self.reader.read_scene(path)

    def test_scene_with_short_section(self):
        path = self.root / "bad.scene"
        path.write_text(MINIMAL_SCENE.replace("[faces] 4", "[faces] 5"))
        with self.assertRaises(InvalidSceneFileException):
            self.reader.read_scene(path)

    def test_scene_with_out_of_range_face(self):
        path = self.root / "bad.scene"
        path.write_text(MINIMAL_SCENE.replace("1 2 3", "1 2 9"))
        with self.assertRaises(InvalidSceneFileException):
            self.reader.read_scene(path)

    def test_missing_scene(self):
        with self.assertRaises(InvalidSceneFileException):
            self.reader.read_scene(self.root / "absent.scene")

    def test_motion_round_trip(self):
        motion = random_motion(num_joints=3, num_frames=4, seed=2)
        read = self.reader.read_motion(self.writer.write_motion("walk.motion", motion))
        np.testing.assert_array_equal(read.rotations, motion.rotations)
        np.testing.assert_array_equal(read.translations, motion.translations)
        self.assertEqual(read.fps, motion.fps)

    def test_motion_with_wrong_row_width(self):
        path = self.root / "bad.motion"
        header = "# apparelmotion-motion v1\nfps 30\njoints 2\nframes 1\n"
        path.write_text(header + "0 " * 12 + "\n")
        with self.assertRaises(InvalidMotionFileException):
            self.reader.read_motion(path)

    def test_animation_from_obj_sequence_and_npz(self):
        character = tube_character(apparel=None)
        positions = np.stack([character.vertices, character.vertices + 1.0])
        sequence = self.writer.write_obj_sequence("anim", positions, character.faces)
        archive = self.writer.write_positions("anim.npz", positions)
        np.testing.assert_array_equal(self.reader.read_animation(sequence), positions)
        np.testing.assert_array_equal(self.reader.read_animation(archive), positions)

    def test_empty_frame_directory(self):
        (self.root / "empty").mkdir()
        with self.assertRaises(InvalidAnimationException):
            self.reader.read_animation(self.root / "empty")

    def test_mask(self):
        mask = np.array([True, False, False, True])
        path = self.writer.write_mask("m.txt", mask)
        np.testing.assert_array_equal(self.reader.read_mask(path), mask)

    def test_invalid_mask(self):
        path = self.root / "m.txt"
        path.write_text("0\n2\n")
        with self.assertRaises(InvalidSceneFileException):
            self.reader.read_mask(path)

    def test_checkpoint_round_trip(self):
        checkpoint = Checkpoint(
            arrays={"body/w0": np.arange(6.0).reshape(2, 3)},
            manifest={"stage": "body", "epoch": 2},
        )
        read = self.reader.read_checkpoint(self.writer.write_checkpoint("body.npz", checkpoint))
        np.testing.assert_array_equal(read.arrays["body/w0"], checkpoint.arrays["body/w0"])
        self.assertEqual(read.manifest, checkpoint.manifest)

    def test_missing_checkpoint(self):
        with self.assertRaises(MissingCheckpointException):
            self.reader.read_checkpoint(self.root / "absent.npz")

    def test_checkpoint_without_header(self):
        path = self.root / "plain.npz"
        with open(path, "wb") as fp:
            np.savez(fp, weights=np.zeros(2))
        with self.assertRaises(InvalidCheckpointException):
            self.reader.read_checkpoint(path)

    def test_toml(self):
        path = self.writer.write_toml(
            "manifest.toml", {"seed": np.int64(3), "split": {"test": [1]}}
        )
        self.assertEqual(self.reader.read_toml(path), {"seed": 3, "split": {"test": [1]}})
