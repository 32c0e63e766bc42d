from unittest import TestCase

import numpy as np

from apparelmotion.geometry.exceptions import JointCountMismatchException
from apparelmotion.geometry.retarget import bone_ratios, scale_translations
from apparelmotion.synth.corpus import retargeted
from tests.meshutil import random_motion, tube_character


class TestRetarget(TestCase):
    def test_scale_translations(self):
        motion = random_motion(num_joints=3, num_frames=5, seed=1)
        source = np.array([1.0, 2.0, 0.5])
        target = np.array([2.0, 2.0, 1.0])
        scaled = scale_translations(motion, source, target)
        np.testing.assert_allclose(
            scaled.translations, motion.translations * [[[2.0], [1.0], [2.0]]]
        )
        np.testing.assert_array_equal(scaled.rotations, motion.rotations)
        np.testing.assert_array_equal(scaled.source_bones, target)

    def test_mismatched_bones(self):
        with self.assertRaises(JointCountMismatchException):
            bone_ratios(np.ones(3), np.ones(2))
        with self.assertRaises(JointCountMismatchException):
            scale_translations(random_motion(3, 2), np.ones(2), np.ones(2))

    def test_retargeting_twice_changes_nothing(self):
        character = tube_character()
        motion = random_motion(num_joints=3, num_frames=4, seed=3)
        captured = scale_translations(motion, character.bone_lengths(), np.array([0.4, 0.3, 0.6]))
        once = retargeted(character, captured)
        twice = retargeted(character, once)
        np.testing.assert_array_equal(once.translations, twice.translations)
        np.testing.assert_allclose(once.translations, motion.translations, atol=1e-15)

    def test_motion_without_source_bones_is_unchanged(self):
        motion = random_motion(num_joints=3, num_frames=2)
        self.assertIs(retargeted(tube_character(), motion), motion)
