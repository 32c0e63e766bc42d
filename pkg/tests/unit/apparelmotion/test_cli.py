from pathlib import Path
import tempfile
from unittest import TestCase

import numpy as np
import toml

from apparelmotion.cli import METRICS_FILENAME, RESOLVED_CONFIG_FILENAME, build_parser, main
from apparelmotion.core.artifact_io.reader import FileArtifactReader
from apparelmotion.core.artifact_io.writer import FileArtifactWriter
from apparelmotion.core.config import Config
from apparelmotion.pipeline.dataset import Corpus
from apparelmotion.synth.corpus import MANIFEST_FILENAME, TEST, CorpusManifest
from tests.corpusutil import TINY_SYNTH, build_tiny_corpus, tiny_config, train_checkpoints


class TestParser(TestCase):
    def test_overrides_accumulate(self):
        args_ns = build_parser().parse_args(
            ["gen-data", "--out", "x", "--set", "seed=4", "--set", "synth.frames=9"]
        )
        self.assertEqual(args_ns.set, ["seed=4", "synth.frames=9"])
        self.assertEqual(args_ns.out, Path("x"))

    def test_body_variant_flags_are_exclusive(self):
        with self.assertRaises(SystemExit):
            build_parser().parse_args(
                ["train-body", "--data", "d", "--out", "o", "--no-attention", "--sort-geodesic"]
            )

    def test_unknown_ablation_variant(self):
        with self.assertRaises(SystemExit):
            build_parser().parse_args(
                [
                    "infer",
                    "--scene",
                    "s",
                    "--motion",
                    "m",
                    "--ckpt-dir",
                    "c",
                    "--out-dir",
                    "o",
                    "--ablate",
                    "apparel-only",
                ]
            )

    def test_export_weights_threshold_default(self):
        args_ns = build_parser().parse_args(
            ["export-weights", "--ckpt", "c", "--scene", "s", "--out", "o"]
        )
        self.assertEqual(args_ns.min_weight, 1e-4)


class TestMain(TestCase):
    def setUp(self):
        self._temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self._temp_dir.name)
        self.config_path = self.root / "tiny.toml"
        self.config_path.write_text(tiny_config().to_toml())

    def tearDown(self):
        self._temp_dir.cleanup()

    def test_gen_data_writes_corpus_and_resolved_config(self):
        out = self.root / "corpus"
        status = main(
            [
                "gen-data",
                "--config",
                str(self.config_path),
                "--chars",
                "2",
                "--frames",
                "3",
                "--seed",
                "8",
                "--out",
                str(out),
            ]
        )
        self.assertEqual(status, 0)
        manifest = CorpusManifest.from_path(out / MANIFEST_FILENAME)
        self.assertEqual(manifest.seed, 8)
        self.assertEqual(len(manifest.characters), 2)
        resolved = Config.from_path(out / RESOLVED_CONFIG_FILENAME)
        self.assertEqual(resolved.synth.frames, 3)
        self.assertEqual(resolved.seed, 8)
        self.assertEqual(resolved.body, tiny_config().body)

    def test_configuration_errors_exit_nonzero(self):
        status = main(
            ["gen-data", "--set", "synth.no_such_key=1", "--out", str(self.root / "corpus")]
        )
        self.assertEqual(status, 1)
        self.assertFalse((self.root / "corpus").exists())

    def test_missing_config_file_exits_nonzero(self):
        status = main(
            [
                "gen-data",
                "--config",
                str(self.root / "missing.toml"),
                "--out",
                str(self.root / "corpus"),
            ]
        )
        self.assertEqual(status, 1)
        self.assertFalse((self.root / "corpus").exists())

    def test_missing_checkpoint_exits_nonzero(self):
        status = main(
            [
                "segment",
                "--ckpt",
                str(self.root / "missing.npz"),
                "--scene",
                str(self.root / "missing.scene"),
                "--out",
                str(self.root / "mask.txt"),
            ]
        )
        self.assertEqual(status, 1)

    def test_eval_of_ground_truth_against_itself(self):
        main(
            [
                "gen-data",
                "--config",
                str(self.config_path),
                "--out",
                str(self.root / "corpus"),
            ]
        )
        corpus = self.root / "corpus"
        manifest = CorpusManifest.from_path(corpus / MANIFEST_FILENAME)
        sample = manifest.samples[0]
        scene = corpus / manifest.characters[sample.character].path
        character = FileArtifactReader().read_scene(scene)
        FileArtifactWriter(self.root).write_mask("mask.txt", character.gt_apparel_mask)
        status = main(
            [
                "eval",
                "--pred",
                str(corpus / sample.gt),
                "--gt",
                str(corpus / sample.gt),
                "--scene",
                str(scene),
                "--mask",
                str(self.root / "mask.txt"),
                "--motion",
                str(corpus / manifest.motions[sample.motion].path),
                "--out",
                str(self.root / "report" / "report.txt"),
            ]
        )
        self.assertEqual(status, 0)
        report = (self.root / "report" / "report.txt").read_text().splitlines()
        self.assertEqual(report[1].split()[1:5], ["0.00", "0.00", "0.00", "1.00"])
        metrics = toml.loads((self.root / "report" / METRICS_FILENAME).read_text())
        self.assertEqual(metrics["summary"]["pmd"], 0.0)
        self.assertEqual(len(metrics["frames"]), tiny_config().synth.frames)
        self.assertTrue(np.isfinite(metrics["summary"]["penetration"]))


class TestInfer(TestCase):
    @classmethod
    def setUpClass(cls):
        cls._temp_dir = tempfile.TemporaryDirectory()
        cls.root = Path(cls._temp_dir.name)
        corpus = Corpus(build_tiny_corpus(cls.root / "corpus"))
        cls.checkpoint_dir = cls.root / "checkpoints"
        train_checkpoints(corpus, cls.checkpoint_dir)
        sample = corpus.samples(TEST)[0]
        manifest = corpus.manifest
        cls.scene = corpus.root / manifest.characters[sample.character].path
        cls.motion = corpus.root / manifest.motions[sample.motion].path
        cls.gt = corpus.root / sample.gt

    @classmethod
    def tearDownClass(cls):
        cls._temp_dir.cleanup()

    def infer(self, out_dir, *extra):
        return main(
            [
                "infer",
                "--scene",
                str(self.scene),
                "--motion",
                str(self.motion),
                "--ckpt-dir",
                str(self.checkpoint_dir),
                "--out-dir",
                str(out_dir),
                *extra,
            ]
        )

    def test_ground_truth_writes_metrics_sidecar(self):
        out_dir = self.root / "with_gt"
        self.assertEqual(self.infer(out_dir, "--gt", str(self.gt)), 0)
        metrics = toml.loads((out_dir / METRICS_FILENAME).read_text())
        self.assertEqual(
            set(metrics["summary"]), {"pmd", "pmd_apparel", "pmd_body", "els", "penetration"}
        )
        self.assertTrue(all(np.isfinite(value) for value in metrics["summary"].values()))
        self.assertEqual(
            [frame["frame"] for frame in metrics["frames"]], list(range(TINY_SYNTH.frames))
        )
        frames = FileArtifactReader().read_animation(out_dir)
        self.assertEqual(len(frames), TINY_SYNTH.frames)

    def test_no_metrics_without_ground_truth(self):
        out_dir = self.root / "without_gt"
        self.assertEqual(self.infer(out_dir, "--ablate", "body-only"), 0)
        self.assertTrue((out_dir / RESOLVED_CONFIG_FILENAME).exists())
        self.assertFalse((out_dir / METRICS_FILENAME).exists())
