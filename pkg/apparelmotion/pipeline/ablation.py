"""Ablation tables over the held-out clips of a corpus.

Module rows compare the deformation modules against physics ground truth. Geodesic attention
rows compare body networks of each BodyVariant, skinning the whole mesh, against ground truth
simulated without apparel physics.
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from apparelmotion.core.config import BodyVariant
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.evaluation.metrics import MetricReport, evaluate_clip
from apparelmotion.models.body import BodyNetwork
from apparelmotion.pipeline.dataset import Corpus
from apparelmotion.pipeline.inference import DeformationModels, Variant, transfer_motion
from apparelmotion.pipeline.training import load_body
from apparelmotion.synth.corpus import TEST

MODULE_ROWS: Tuple[Tuple[str, Variant, bool], ...] = (
    ("Body Module", Variant.BODY_ONLY, False),
    ("Body + Apparel", Variant.BODY_APPAREL, False),
    ("Full Model", Variant.FULL, False),
    ("Full Model + GT Mask", Variant.FULL, True),
)

ATTENTION_ROW_NAMES: Dict[BodyVariant, str] = {
    BodyVariant.ATTENTION: "G + Attention",
    BodyVariant.NO_GEODESIC: "w/o G",
    BodyVariant.SORT_GEODESIC: "Sort by G",
}


def mean_report(reports: Sequence[MetricReport]) -> MetricReport:
    """Clip-averaged metrics; penetration is averaged over the clips that report it.

    >>> clips = [MetricReport(0.5, 1.0, 0.0, 1.0, None), MetricReport(1.5, 2.0, 0.0, 0.5, 0.25)]
    >>> mean_report(clips)
    MetricReport(pmd=1.0, pmd_apparel=1.5, pmd_body=0.0, els=0.75, penetration=0.25)
    """
    penetrations = [report.penetration for report in reports if report.penetration is not None]
    return MetricReport(
        pmd=float(np.mean([report.pmd for report in reports])),
        pmd_apparel=float(np.mean([report.pmd_apparel for report in reports])),
        pmd_body=float(np.mean([report.pmd_body for report in reports])),
        els=float(np.mean([report.els for report in reports])),
        penetration=float(np.mean(penetrations)) if penetrations else None,
    )


def load_body_variants(paths: Dict[BodyVariant, Path]) -> Dict[BodyVariant, BodyNetwork]:
    return {variant: load_body(path) for variant, path in paths.items()}


def run_ablation(
    corpus: Corpus,
    models: DeformationModels,
    body_variants: Optional[Dict[BodyVariant, BodyNetwork]] = None,
    limit: Optional[int] = None,
    threads: Optional[int] = None,
) -> List[Tuple[str, MetricReport]]:
    """(row name, clip-averaged MetricReport) for every module row, then one geodesic attention
    row per body network in body_variants (models.body stands in for ATTENTION when absent)."""
    logger = Logger()
    samples = corpus.samples(TEST, limit=limit)
    variants = dict(body_variants or {})
    variants.setdefault(BodyVariant.ATTENTION, models.body)
    rows: List[Tuple[str, MetricReport]] = []
    with logger.bind(num_samples=len(samples)):
        logger.info(event=LogEvent.AblationStart, num_rows=len(MODULE_ROWS) + len(variants))
        for name, variant, use_gt_mask in MODULE_ROWS:
            reports = []
            for sample in samples:
                data = corpus.load(sample, physics=True)
                character = data.character
                gt_mask = character.apparel_mask_or_empty() if use_gt_mask else None
                predicted = transfer_motion(
                    character,
                    data.motion,
                    models,
                    gt_mask=gt_mask,
                    variant=variant,
                    threads=threads,
                )
                reports.append(
                    evaluate_clip(
                        predicted,
                        data.ground_truth,
                        character.edges,
                        character.apparel_mask_or_empty(),
                        character,
                        data.motion.translations,
                    )
                )
            rows.append((name, mean_report(reports)))
            logger.info(event=LogEvent.AblationVariantEnd, row=name)
        for body_variant in BodyVariant:
            if body_variant not in variants:
                continue
            name = ATTENTION_ROW_NAMES[body_variant]
            variant_models = models.with_body(variants[body_variant])
            reports = []
            for sample in samples:
                data = corpus.load(sample, physics=False)
                character = data.character
                predicted = transfer_motion(
                    character,
                    data.motion,
                    variant_models,
                    variant=Variant.BODY_ONLY,
                    threads=threads,
                )
                reports.append(
                    evaluate_clip(
                        predicted,
                        data.ground_truth,
                        character.edges,
                        character.apparel_mask_or_empty(),
                    )
                )
            rows.append((name, mean_report(reports)))
            logger.info(event=LogEvent.AblationVariantEnd, row=name)
        logger.info(event=LogEvent.AblationEnd)
    return rows
