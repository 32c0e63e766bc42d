"""Point-wise mesh distance, edge length score and body penetration of animations.

Animations are (T, N, 3) arrays in meters. Every metric averages over frames last, so the
result does not depend on frame order.
"""
from typing import NamedTuple, Optional

import numpy as np

from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.evaluation.exceptions import AnimationMismatchException
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.mesh import edge_lengths
from apparelmotion.geometry.skinning import body_capsules, inside_any_capsule, posed_joints

PENETRATION_TOLERANCE = 1e-6


def _check_pair(predicted: np.ndarray, ground_truth: np.ndarray) -> None:
    if predicted.shape != ground_truth.shape or predicted.ndim != 3 or predicted.shape[2] != 3:
        raise AnimationMismatchException(
            f"predicted animation {predicted.shape} does not match ground truth "
            f"{ground_truth.shape}"
        )


def pmd(
    predicted: np.ndarray, ground_truth: np.ndarray, mask: Optional[np.ndarray] = None
) -> float:
    """Mean Euclidean vertex distance over the vertices selected by mask (all by default),
    averaged over frames. An empty selection scores 0.

    >>> pmd(np.zeros((1, 2, 3)), np.full((1, 2, 3), [0.5, 0.0, 0.0]))
    0.5
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    _check_pair(predicted, ground_truth)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        predicted, ground_truth = predicted[:, mask], ground_truth[:, mask]
    if predicted.shape[1] == 0:
        return 0.0
    distances = np.linalg.norm(predicted - ground_truth, axis=2)
    return float(np.mean(np.mean(distances, axis=1)))


def els(predicted: np.ndarray, ground_truth: np.ndarray, edges: np.ndarray) -> float:
    """Edge length score: per frame, the mean over edges of
    clamp(1 - |len_pred - len_gt| / len_gt, 0, 1), averaged over frames. Edges of zero ground
    truth length are skipped with a warning; with no usable edge the score is 1.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    _check_pair(predicted, ground_truth)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    scores = []
    for frame, (predicted_frame, truth_frame) in enumerate(zip(predicted, ground_truth)):
        truth_lengths = edge_lengths(truth_frame, edges)
        usable = truth_lengths > 0
        if not np.all(usable):
            Logger().warning(
                event=LogEvent.ZeroLengthReferenceEdge,
                frame=frame,
                num_skipped=int(np.sum(~usable)),
            )
        if not np.any(usable):
            scores.append(1.0)
            continue
        predicted_lengths = edge_lengths(predicted_frame, edges[usable])
        agreement = 1.0 - np.abs(predicted_lengths - truth_lengths[usable]) / truth_lengths[usable]
        scores.append(float(np.mean(np.clip(agreement, 0.0, 1.0))))
    return float(np.mean(scores)) if scores else 1.0


def penetration_fraction(
    predicted: np.ndarray,
    character: RiggedCharacter,
    joint_translations: np.ndarray,
    apparel_mask: np.ndarray,
    tolerance: float = PENETRATION_TOLERANCE,
) -> float:
    """Fraction of apparel vertices lying deeper than tolerance inside any body capsule of the
    character posed by the (T, J, 3) joint translations, averaged over frames. No apparel
    scores 0."""
    apparel_mask = np.asarray(apparel_mask, dtype=bool)
    if not np.any(apparel_mask):
        return 0.0
    fractions = []
    for frame, positions in enumerate(np.asarray(predicted, dtype=np.float64)):
        capsules = body_capsules(
            character, posed_joints(character.joints, joint_translations[frame])
        )
        inside = inside_any_capsule(positions[apparel_mask], capsules, tolerance)
        fractions.append(float(np.mean(inside)))
    return float(np.mean(fractions))


class MetricReport(NamedTuple):
    """All metrics of one clip, distances in meters."""

    pmd: float
    pmd_apparel: float
    pmd_body: float
    els: float
    penetration: Optional[float]


def evaluate_clip(
    predicted: np.ndarray,
    ground_truth: np.ndarray,
    edges: np.ndarray,
    apparel_mask: np.ndarray,
    character: Optional[RiggedCharacter] = None,
    joint_translations: Optional[np.ndarray] = None,
) -> MetricReport:
    """Every metric of one clip; penetration needs a character with bone radii and the joint
    translations driving it."""
    apparel_mask = np.asarray(apparel_mask, dtype=bool)
    penetration = None
    if (
        character is not None
        and joint_translations is not None
        and character.bone_radii is not None
    ):
        penetration = penetration_fraction(predicted, character, joint_translations, apparel_mask)
    return MetricReport(
        pmd=pmd(predicted, ground_truth),
        pmd_apparel=pmd(predicted, ground_truth, apparel_mask),
        pmd_body=pmd(predicted, ground_truth, ~apparel_mask),
        els=els(predicted, ground_truth, edges),
        penetration=penetration,
    )
