"""Motion transfer onto a rigged character with trained deformation networks."""
from concurrent.futures import Future, ThreadPoolExecutor, as_completed
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, NamedTuple, Optional

import numpy as np

from apparelmotion.core.config import RuntimeSettings
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.exceptions import JointCountMismatchException
from apparelmotion.geometry.geodesic import compute_geodesic_matrix
from apparelmotion.geometry.motion import MotionClip
from apparelmotion.geometry.skinning import linear_blend_skinning
from apparelmotion.models.apparel import ApparelNetwork, ApparelState, motion_features
from apparelmotion.models.body import BodyNetwork
from apparelmotion.models.refine import RefineNetwork
from apparelmotion.models.segmentation import ApparelMask, SegmentationNetwork
from apparelmotion.pipeline.exceptions import NonFiniteOutputException, UnknownVariantException
from apparelmotion.pipeline.training import (
    APPAREL_CHECKPOINT,
    BODY_CHECKPOINT,
    SEGMENTATION_CHECKPOINT,
    ApparelExample,
    apparel_example,
    load_apparel,
    load_body,
    load_segmentation,
    root_positions,
)
from apparelmotion.synth.corpus import retargeted


class Variant(str, Enum):
    """Which deformation modules run during a transfer."""

    BODY_ONLY = "body-only"
    BODY_APPAREL = "body-apparel"
    FULL = "full"

    @classmethod
    def parse(cls, name: str) -> "Variant":
        try:
            return cls(name)
        except ValueError as ve:
            choices = ", ".join(variant.value for variant in cls)
            raise UnknownVariantException(
                f"unknown variant '{name}', expected one of {choices}"
            ) from ve


class DeformationModels(NamedTuple):
    """The four trained networks of a transfer."""

    segmentation: SegmentationNetwork
    body: BodyNetwork
    apparel: ApparelNetwork
    refine: RefineNetwork

    @classmethod
    def from_dir(
        cls, checkpoint_dir: Path, body_checkpoint: Optional[Path] = None
    ) -> "DeformationModels":
        """Load segmentation.npz, body.npz and apparel.npz from checkpoint_dir; body_checkpoint
        replaces the body network, e.g. with an ablation variant."""
        apparel, refine = load_apparel(checkpoint_dir / APPAREL_CHECKPOINT)
        return cls(
            segmentation=load_segmentation(checkpoint_dir / SEGMENTATION_CHECKPOINT),
            body=load_body(body_checkpoint or checkpoint_dir / BODY_CHECKPOINT),
            apparel=apparel,
            refine=refine,
        )

    def with_body(self, body: BodyNetwork) -> "DeformationModels":
        return self._replace(body=body)


def map_frames(
    frame_fn: Callable[[int], np.ndarray], num_frames: int, threads: int
) -> np.ndarray:
    """Stack frame_fn(t) for every frame, evaluating frames on a pool of threads."""
    results: Dict[int, np.ndarray] = {}
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures: Dict[Future, int] = {
            executor.submit(frame_fn, frame): frame for frame in range(num_frames)
        }
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return np.stack([results[frame] for frame in range(num_frames)])


def _check_joint_count(character: RiggedCharacter, motion: MotionClip, body: BodyNetwork) -> None:
    if motion.num_joints != character.num_joints:
        raise JointCountMismatchException(
            f"motion has {motion.num_joints} joints, character has {character.num_joints}"
        )
    if body.num_joints != character.num_joints:
        raise JointCountMismatchException(
            f"body network was trained for {body.num_joints} joints, character has "
            f"{character.num_joints}"
        )


def skin_whole_mesh(
    character: RiggedCharacter, motion: MotionClip, body: BodyNetwork, threads: int
) -> np.ndarray:
    """(T, N, 3) every vertex, apparel included, deformed by LBS with predicted weights."""
    geodesic = compute_geodesic_matrix(character, np.ones(character.num_vertices, dtype=bool))
    weights = body.skinning_weights(character, geodesic)
    return map_frames(
        lambda frame: linear_blend_skinning(
            character.vertices,
            weights,
            character.joints,
            motion.rotations[frame],
            motion.translations[frame],
        ),
        motion.num_frames,
        threads,
    )


def roll_out_apparel(
    apparel: ApparelNetwork, example: ApparelExample, motion: MotionClip
) -> np.ndarray:
    """(T, N_a, 3) apparel positions. Frame 0 is the rest shape; later frames are predicted in
    windows of clip_len frames, each window seeded with the last history_k outputs of the one
    before it."""
    logger = Logger()
    config = apparel.config
    character = example.character
    rest = character.vertices[example.vertex_order.apparel_indices]
    features = motion_features(motion.rotations, motion.translations, character.height)
    roots = root_positions(character, motion)
    frames = np.empty((motion.num_frames, len(rest), 3))
    frames[0] = rest
    state = ApparelState.from_rest(rest, example.component_id, config.history_k)
    for start in range(1, motion.num_frames, config.clip_len):
        window = np.arange(start, min(start + config.clip_len, motion.num_frames))
        predictions = apparel.rollout(
            state, features[window], roots[window - 1], example.adjacency, first_frame=start
        )
        for frame, predicted in zip(window, predictions):
            frames[frame] = predicted.numpy()
        history = [frames[max(int(window[-1]) - lag, 0)] for lag in range(config.history_k)]
        state = ApparelState(history, example.component_id, config.history_k)
        logger.debug(
            event=LogEvent.InferWindowEnd, first_frame=start, last_frame=int(window[-1])
        )
    return frames


def transfer_motion(
    character: RiggedCharacter,
    motion: MotionClip,
    models: DeformationModels,
    gt_mask: Optional[np.ndarray] = None,
    variant: Variant = Variant.FULL,
    threads: Optional[int] = None,
) -> np.ndarray:
    """(T, N, 3) character deformed by motion.

    The motion is retargeted onto the character's bones, the mesh is split by the predicted
    apparel mask (or gt_mask), the body is skinned per frame, apparel is rolled out and both are
    merged and refined. Variant.BODY_ONLY skins the whole mesh; Variant.BODY_APPAREL merges body
    and apparel without refinement.
    """
    logger = Logger()
    threads = threads or RuntimeSettings().threads
    _check_joint_count(character, motion, models.body)
    motion = retargeted(character, motion)
    with logger.bind(variant=variant.value, num_frames=motion.num_frames, num_threads=threads):
        logger.info(event=LogEvent.InferStart, num_vertices=character.num_vertices)
        if variant == Variant.BODY_ONLY:
            output = skin_whole_mesh(character, motion, models.body, threads)
        else:
            mask = (
                ApparelMask.from_labels(gt_mask)
                if gt_mask is not None
                else models.segmentation.segment(character)
            )
            output = _transfer_split(character, motion, models, mask, variant, threads)
        if not np.all(np.isfinite(output)):
            bad_frame = int(np.argmax(~np.all(np.isfinite(output), axis=(1, 2))))
            raise NonFiniteOutputException(
                f"transferred animation is not finite at frame {bad_frame}"
            )
        logger.info(event=LogEvent.InferEnd)
    return output


def _transfer_split(
    character: RiggedCharacter,
    motion: MotionClip,
    models: DeformationModels,
    mask: ApparelMask,
    variant: Variant,
    threads: int,
) -> np.ndarray:
    example = apparel_example(character, mask, models.body)
    order = example.vertex_order
    rest_body = character.vertices[order.body_indices]
    body = map_frames(
        lambda frame: linear_blend_skinning(
            rest_body,
            example.skinning,
            character.joints,
            motion.rotations[frame],
            motion.translations[frame],
        ),
        motion.num_frames,
        threads,
    )
    apparel = np.zeros((motion.num_frames, 0, 3))
    if len(order.apparel_indices):
        models.apparel.require_trained()
        apparel = roll_out_apparel(models.apparel, example, motion)
    if variant == Variant.BODY_APPAREL:
        return np.stack(
            [order.tile(apparel[frame], body[frame]).numpy() for frame in range(motion.num_frames)]
        )
    models.refine.require_trained()
    roots = root_positions(character, motion)
    return np.stack(
        [
            models.refine.joint_refine(
                apparel[frame],
                body[frame],
                order,
                example.mask.probabilities,
                example.one_ring,
                roots[frame],
            )[0].numpy()
            for frame in range(motion.num_frames)
        ]
    )
