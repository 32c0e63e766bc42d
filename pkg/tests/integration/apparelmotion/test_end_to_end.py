from pathlib import Path
import tempfile
import unittest

import numpy as np

from apparelmotion.cli import main
from apparelmotion.core.artifact_io.reader import FileArtifactReader
from apparelmotion.synth.corpus import MANIFEST_FILENAME, TEST, CorpusManifest
from tests.corpusutil import tiny_config


def run(*argv: str) -> None:
    status = main([str(arg) for arg in argv])
    assert status == 0, f"{argv[0]} exited with {status}"


class TestEndToEnd(unittest.TestCase):
    def test(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            root = Path(temp_dir)
            config_path = root / "tiny.toml"
            config_path.write_text(tiny_config().to_toml())
            config = ("--config", config_path)
            data, ckpt = root / "corpus", root / "checkpoints"

            run("gen-data", *config, "--threads", "2", "--out", data)
            run("train-seg", *config, "--data", data, "--out", ckpt / "segmentation.npz")
            run("train-body", *config, "--data", data, "--out", ckpt / "body.npz")
            run(
                "train-body",
                *config,
                "--sort-geodesic",
                "--data",
                data,
                "--out",
                root / "variants" / "body_sort.npz",
            )
            run(
                "train-apparel",
                *config,
                "--data",
                data,
                "--seg",
                ckpt / "segmentation.npz",
                "--body",
                ckpt / "body.npz",
                "--out",
                ckpt / "apparel.npz",
            )

            manifest = CorpusManifest.from_path(data / MANIFEST_FILENAME)
            sample = manifest.samples_in(TEST)[0]
            scene = data / manifest.characters[sample.character].path
            motion = data / manifest.motions[sample.motion].path
            reader = FileArtifactReader()
            character = reader.read_scene(scene)

            run(
                "segment",
                "--ckpt",
                ckpt / "segmentation.npz",
                "--scene",
                scene,
                "--out",
                root / "mask.txt",
            )
            predicted_mask = reader.read_mask(root / "mask.txt")
            self.assertEqual(predicted_mask.shape, (character.num_vertices,))

            run(
                "infer",
                *config,
                "--scene",
                scene,
                "--motion",
                motion,
                "--ckpt-dir",
                ckpt,
                "--out-dir",
                root / "frames",
                "--gt",
                data / sample.gt,
            )
            frames = reader.read_animation(root / "frames")
            self.assertEqual(frames.shape, (tiny_config().synth.frames, character.num_vertices, 3))
            self.assertTrue(np.all(np.isfinite(frames)))
            self.assertTrue((root / "frames" / "resolved_config.toml").exists())
            self.assertTrue((root / "frames" / "metrics.toml").exists())

            run(
                "eval",
                "--pred",
                root / "frames",
                "--gt",
                data / sample.gt,
                "--scene",
                scene,
                "--mask",
                root / "mask.txt",
                "--out",
                root / "eval" / "report.txt",
            )
            self.assertIn("PMD (cm)", (root / "eval" / "report.txt").read_text())

            run(
                "ablate",
                *config,
                "--data",
                data,
                "--ckpt-dir",
                ckpt,
                "--sort-geodesic-ckpt",
                root / "variants" / "body_sort.npz",
                "--out",
                root / "ablation" / "table.txt",
            )
            table = (root / "ablation" / "table.txt").read_text().splitlines()
            self.assertEqual(len(table), 1 + 4 + 2)
            self.assertTrue(table[-1].startswith("Sort by G"))

            run(
                "export-weights",
                "--ckpt",
                ckpt / "body.npz",
                "--scene",
                scene,
                "--out",
                root / "weights.txt",
            )
            rows = [
                line.split()
                for line in (root / "weights.txt").read_text().splitlines()
                if line and not line.startswith("#")
            ]
            vertices = {int(row[0]) for row in rows}
            self.assertEqual(vertices, set(range(character.num_vertices)))
            self.assertTrue(all(float(row[2]) >= 1e-4 for row in rows))

            # a resumed stage that has already finished reproduces its checkpoint
            before = reader.read_checkpoint(ckpt / "body.npz").arrays
            run("train-body", *config, "--data", data, "--out", ckpt / "body.npz", "--resume")
            after = reader.read_checkpoint(ckpt / "body.npz").arrays
            for name, value in before.items():
                np.testing.assert_array_equal(after[name], value)
