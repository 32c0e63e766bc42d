"""apparelmotion command line: corpus generation, three-stage training, inference, evaluation
and ablations."""
import argparse
from pathlib import Path
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from apparelmotion.core.artifact_io.reader import FileArtifactReader
from apparelmotion.core.artifact_io.writer import FileArtifactWriter
from apparelmotion.core.config import BodyVariant, Config, parse_override
from apparelmotion.core.exceptions import ApparelMotionException
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.evaluation.metrics import evaluate_clip
from apparelmotion.evaluation.report import format_table, metrics_document
from apparelmotion.geometry.geodesic import compute_geodesic_matrix
from apparelmotion.pipeline.ablation import load_body_variants, run_ablation
from apparelmotion.pipeline.dataset import Corpus
from apparelmotion.pipeline.inference import DeformationModels, Variant, transfer_motion
from apparelmotion.pipeline.training import (
    load_body,
    load_segmentation,
    train_apparel,
    train_body,
    train_segmentation,
)
from apparelmotion.synth.corpus import build_corpus, retargeted

RESOLVED_CONFIG_FILENAME = "resolved_config.toml"
METRICS_FILENAME = "metrics.toml"


def resolve_config(args_ns: argparse.Namespace, flags: Optional[Dict[str, Any]] = None) -> Config:
    """Layer the --config file, --set overrides and dedicated flags (those not None)."""
    overrides: Dict[str, Any] = dict(parse_override(assignment) for assignment in args_ns.set)
    if args_ns.seed is not None:
        overrides["seed"] = args_ns.seed
    for key, value in (flags or {}).items():
        if value is not None:
            overrides[key] = value
    config = Config.from_path(args_ns.config, overrides)
    Logger().info(
        event=LogEvent.ConfigResolved,
        source=str(args_ns.config) if args_ns.config else "<defaults>",
        num_overrides=len(overrides),
    )
    return config


def write_resolved_config(config: Config, out_dir: Path) -> Path:
    return FileArtifactWriter(out_dir).write_text(RESOLVED_CONFIG_FILENAME, config.to_toml())


def gen_data(args_ns: argparse.Namespace) -> int:
    config = resolve_config(
        args_ns,
        {
            "synth.characters": args_ns.chars,
            "synth.motions": args_ns.motions,
            "synth.frames": args_ns.frames,
        },
    )
    build_corpus(config.synth, config.seed, args_ns.out, threads=args_ns.threads)
    write_resolved_config(config, args_ns.out)
    return 0


def train_seg(args_ns: argparse.Namespace) -> int:
    config = resolve_config(args_ns, {"segmentation.epochs": args_ns.epochs})
    train_segmentation(config, Corpus(args_ns.data), args_ns.out, resume=args_ns.resume)
    write_resolved_config(config, args_ns.out.parent)
    return 0


def segment(args_ns: argparse.Namespace) -> int:
    network = load_segmentation(args_ns.ckpt)
    mask = network.segment(FileArtifactReader().read_scene(args_ns.scene))
    FileArtifactWriter(args_ns.out.parent).write_mask(args_ns.out.name, mask.labels)
    print(f"{mask.num_apparel} apparel, {mask.num_body} body vertices")
    return 0


def train_body_stage(args_ns: argparse.Namespace) -> int:
    variant = None
    if args_ns.no_attention:
        variant = BodyVariant.NO_GEODESIC.value
    elif args_ns.sort_geodesic:
        variant = BodyVariant.SORT_GEODESIC.value
    config = resolve_config(args_ns, {"body.variant": variant, "body.epochs": args_ns.epochs})
    train_body(config, Corpus(args_ns.data), args_ns.out, resume=args_ns.resume)
    write_resolved_config(config, args_ns.out.parent)
    return 0


def train_apparel_stage(args_ns: argparse.Namespace) -> int:
    config = resolve_config(
        args_ns, {"apparel.clip_len": args_ns.clip_len, "apparel.epochs": args_ns.epochs}
    )
    train_apparel(
        config, Corpus(args_ns.data), args_ns.seg, args_ns.body, args_ns.out, resume=args_ns.resume
    )
    write_resolved_config(config, args_ns.out.parent)
    return 0


def infer(args_ns: argparse.Namespace) -> int:
    config = resolve_config(args_ns)
    reader = FileArtifactReader()
    character = reader.read_scene(args_ns.scene)
    motion = reader.read_motion(args_ns.motion)
    gt_mask = reader.read_mask(args_ns.gt_mask) if args_ns.gt_mask else None
    models = DeformationModels.from_dir(args_ns.ckpt_dir, body_checkpoint=args_ns.body_ckpt)
    predicted = transfer_motion(
        character, motion, models, gt_mask=gt_mask, variant=Variant.parse(args_ns.ablate)
    )
    out_dir: Path = args_ns.out_dir
    FileArtifactWriter(out_dir.parent).write_obj_sequence(out_dir.name, predicted, character.faces)
    write_resolved_config(config, out_dir)
    if args_ns.gt:
        apparel_mask = gt_mask if gt_mask is not None else character.apparel_mask_or_empty()
        ground_truth = reader.read_animation(args_ns.gt)
        translations = retargeted(character, motion).translations
        report = evaluate_clip(
            predicted, ground_truth, character.edges, apparel_mask, character, translations
        )
        document = metrics_document(
            predicted, ground_truth, character.edges, apparel_mask, character, translations
        )
        FileArtifactWriter(out_dir).write_toml(METRICS_FILENAME, document)
        print(format_table([(Variant.parse(args_ns.ablate).value, report)]))
    return 0


def evaluate(args_ns: argparse.Namespace) -> int:
    reader = FileArtifactReader()
    character = reader.read_scene(args_ns.scene)
    predicted = reader.read_animation(args_ns.pred)
    ground_truth = reader.read_animation(args_ns.gt)
    mask = reader.read_mask(args_ns.mask)
    translations = None
    if args_ns.motion:
        translations = retargeted(character, reader.read_motion(args_ns.motion)).translations
    document = metrics_document(
        predicted, ground_truth, character.edges, mask, character, translations
    )
    report = evaluate_clip(predicted, ground_truth, character.edges, mask, character, translations)
    table = format_table([(args_ns.pred.name, report)])
    writer = FileArtifactWriter(args_ns.out.parent)
    writer.write_text(args_ns.out.name, table + "\n")
    writer.write_toml(METRICS_FILENAME, document)
    print(table)
    return 0


def ablate(args_ns: argparse.Namespace) -> int:
    config = resolve_config(args_ns)
    models = DeformationModels.from_dir(args_ns.ckpt_dir)
    variant_paths = {}
    if args_ns.no_attention_ckpt:
        variant_paths[BodyVariant.NO_GEODESIC] = args_ns.no_attention_ckpt
    if args_ns.sort_geodesic_ckpt:
        variant_paths[BodyVariant.SORT_GEODESIC] = args_ns.sort_geodesic_ckpt
    rows = run_ablation(
        Corpus(args_ns.data), models, load_body_variants(variant_paths), limit=args_ns.limit
    )
    table = format_table(rows)
    writer = FileArtifactWriter(args_ns.out.parent)
    writer.write_text(args_ns.out.name, table + "\n")
    write_resolved_config(config, args_ns.out.parent)
    print(table)
    return 0


def export_weights(args_ns: argparse.Namespace) -> int:
    reader = FileArtifactReader()
    character = reader.read_scene(args_ns.scene)
    body_mask = np.ones(character.num_vertices, dtype=bool)
    if args_ns.mask:
        body_mask = ~reader.read_mask(args_ns.mask).astype(bool)
    network = load_body(args_ns.ckpt)
    geodesic = compute_geodesic_matrix(character, body_mask)
    weights = np.zeros((character.num_vertices, character.num_joints))
    weights[geodesic.body_indices] = network.skinning_weights(character, geodesic)
    FileArtifactWriter(args_ns.out.parent).write_skinning(
        args_ns.out.name, weights, min_weight=args_ns.min_weight
    )
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="toml config file")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="config override, may be repeated",
    )
    parser.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apparelmotion")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> Any:
        subparser = subparsers.add_parser(name, help=help_text)
        _add_common(subparser)
        subparser.set_defaults(handler=handler)
        return subparser

    gen = add("gen-data", gen_data, "generate a synthetic corpus")
    gen.add_argument("--chars", type=int, default=None)
    gen.add_argument("--motions", type=int, default=None)
    gen.add_argument("--frames", type=int, default=None)
    gen.add_argument("--threads", type=int, default=None)
    gen.add_argument("--out", type=Path, required=True)

    seg = add("train-seg", train_seg, "train apparel segmentation")
    seg.add_argument("--data", type=Path, required=True)
    seg.add_argument("--out", type=Path, required=True)
    seg.add_argument("--epochs", type=int, default=None)
    seg.add_argument("--resume", action="store_true")

    seg_apply = add("segment", segment, "write the predicted apparel mask of a scene")
    seg_apply.add_argument("--ckpt", type=Path, required=True)
    seg_apply.add_argument("--scene", type=Path, required=True)
    seg_apply.add_argument("--out", type=Path, required=True)

    body = add("train-body", train_body_stage, "train body deformation")
    body.add_argument("--data", type=Path, required=True)
    body.add_argument("--out", type=Path, required=True)
    body.add_argument("--epochs", type=int, default=None)
    body.add_argument("--resume", action="store_true")
    fusion = body.add_mutually_exclusive_group()
    fusion.add_argument("--no-attention", action="store_true")
    fusion.add_argument("--sort-geodesic", action="store_true")

    apparel = add("train-apparel", train_apparel_stage, "train apparel deformation and refinement")
    apparel.add_argument("--data", type=Path, required=True)
    apparel.add_argument("--seg", type=Path, required=True)
    apparel.add_argument("--body", type=Path, required=True)
    apparel.add_argument("--out", type=Path, required=True)
    apparel.add_argument("--clip-len", type=int, default=None)
    apparel.add_argument("--epochs", type=int, default=None)
    apparel.add_argument("--resume", action="store_true")

    inference = add("infer", infer, "transfer a motion onto a character")
    inference.add_argument("--scene", type=Path, required=True)
    inference.add_argument("--motion", type=Path, required=True)
    inference.add_argument("--ckpt-dir", type=Path, required=True)
    inference.add_argument("--out-dir", type=Path, required=True)
    inference.add_argument("--body-ckpt", type=Path, default=None)
    inference.add_argument("--gt-mask", type=Path, default=None)
    inference.add_argument("--gt", type=Path, default=None, help="ground truth to report against")
    inference.add_argument(
        "--ablate", default=Variant.FULL.value, choices=[variant.value for variant in Variant]
    )

    evaluation = add("eval", evaluate, "report metrics of a predicted animation")
    evaluation.add_argument("--pred", type=Path, required=True)
    evaluation.add_argument("--gt", type=Path, required=True)
    evaluation.add_argument("--scene", type=Path, required=True)
    evaluation.add_argument("--mask", type=Path, required=True)
    evaluation.add_argument("--out", type=Path, required=True)
    evaluation.add_argument("--motion", type=Path, default=None, help="enables penetration")

    ablation = add("ablate", ablate, "module and geodesic attention ablation tables")
    ablation.add_argument("--data", type=Path, required=True)
    ablation.add_argument("--ckpt-dir", type=Path, required=True)
    ablation.add_argument("--out", type=Path, required=True)
    ablation.add_argument("--no-attention-ckpt", type=Path, default=None)
    ablation.add_argument("--sort-geodesic-ckpt", type=Path, default=None)
    ablation.add_argument("--limit", type=int, default=None)

    export = add("export-weights", export_weights, "write predicted skinning weights")
    export.add_argument("--ckpt", type=Path, required=True)
    export.add_argument("--scene", type=Path, required=True)
    export.add_argument("--out", type=Path, required=True)
    export.add_argument("--mask", type=Path, default=None, help="apparel mask to exclude")
    export.add_argument("--min-weight", type=float, default=1e-4)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args_ns = build_parser().parse_args(argv)
    try:
        return args_ns.handler(args_ns)
    except ApparelMotionException as ame:
        print(f"apparelmotion {args_ns.command}: {ame}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
