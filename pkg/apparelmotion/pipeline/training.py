"""Three-stage training driver: segmentation, body deformation, then apparel deformation and
joint refinement end to end with the first two stages frozen.

Every stage draws its per-epoch sample order and frame picks from default_rng([seed, epoch]), so
a run resumed from a checkpoint reproduces the losses of an uninterrupted run.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import sparse

from apparelmotion.core.artifact_io import Checkpoint
from apparelmotion.core.artifact_io.exceptions import MissingCheckpointException
from apparelmotion.core.artifact_io.reader import FileArtifactReader
from apparelmotion.core.artifact_io.writer import FileArtifactWriter
from apparelmotion.core.config import (
    ApparelConfig,
    BodyConfig,
    Config,
    RefineConfig,
    SegmentationConfig,
)
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.geodesic import compute_geodesic_matrix
from apparelmotion.geometry.mesh import induced_edges, one_ring_mean_operator, relabel_edges
from apparelmotion.geometry.motion import MotionClip
from apparelmotion.geometry.skinning import linear_blend_skinning
from apparelmotion.models.apparel import (
    ApparelNetwork,
    ApparelState,
    apparel_components,
    apparel_losses,
    grouped_adjacency,
    motion_features,
)
from apparelmotion.models.body import BodyNetwork, body_losses, lbs_deform
from apparelmotion.models.refine import RefineNetwork, VertexOrder, refine_losses
from apparelmotion.models.segmentation import ApparelMask, SegmentationNetwork, bce_loss
from apparelmotion.nn.optim import adamw_step_from_config
from apparelmotion.nn.parameters import ParameterStore
from apparelmotion.nn.tensor import Tape, Tensor
from apparelmotion.pipeline.dataset import Corpus, SampleData
from apparelmotion.pipeline.exceptions import CheckpointStageMismatchException

SEGMENTATION_STAGE = "segmentation"
BODY_STAGE = "body"
APPAREL_STAGE = "apparel"

SEGMENTATION_CHECKPOINT = "segmentation.npz"
BODY_CHECKPOINT = "body.npz"
APPAREL_CHECKPOINT = "apparel.npz"


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([seed, epoch])


def save_checkpoint(
    path: Path,
    stage: str,
    stores: List[ParameterStore],
    sections: Dict[str, Any],
    epoch: int,
    seed: int,
    num_joints: int,
) -> Path:
    """Write parameters, moment buffers and a manifest naming the stage, the next epoch to run,
    the optimizer step and the config sections the networks were built from."""
    arrays: Dict[str, np.ndarray] = {}
    for store in stores:
        arrays.update(store.state_arrays())
    manifest = {
        "stage": stage,
        "epoch": epoch,
        "step": stores[0].step,
        "seed": seed,
        "num_joints": num_joints,
        "config": sections,
    }
    written = FileArtifactWriter(path.parent).write_checkpoint(
        path.name, Checkpoint(arrays=arrays, manifest=manifest)
    )
    Logger().info(event=LogEvent.CheckpointSaved, stage=stage, epoch=epoch, path=str(written))
    return written


def read_stage_checkpoint(path: Path, stage: str) -> Checkpoint:
    checkpoint = FileArtifactReader().read_checkpoint(path)
    if checkpoint.manifest.get("stage") != stage:
        raise CheckpointStageMismatchException(
            f"{path} holds a {checkpoint.manifest.get('stage')} checkpoint, expected {stage}"
        )
    return checkpoint


def _restore(checkpoint: Checkpoint, stores: List[ParameterStore]) -> int:
    for store in stores:
        store.load_state_arrays(checkpoint.arrays, step=int(checkpoint.manifest["step"]))
    Logger().info(
        event=LogEvent.CheckpointLoaded,
        stage=checkpoint.manifest["stage"],
        epoch=checkpoint.manifest["epoch"],
    )
    return int(checkpoint.manifest["epoch"])


def load_segmentation(path: Path) -> SegmentationNetwork:
    checkpoint = read_stage_checkpoint(path, SEGMENTATION_STAGE)
    config = SegmentationConfig(**checkpoint.manifest["config"]["segmentation"])
    network = SegmentationNetwork(config, np.random.default_rng(0))
    _restore(checkpoint, [network.store])
    return network


def load_body(path: Path) -> BodyNetwork:
    checkpoint = read_stage_checkpoint(path, BODY_STAGE)
    config = BodyConfig(**checkpoint.manifest["config"]["body"])
    network = BodyNetwork(config, int(checkpoint.manifest["num_joints"]), np.random.default_rng(0))
    _restore(checkpoint, [network.store])
    return network


def load_apparel(path: Path) -> Tuple[ApparelNetwork, RefineNetwork]:
    checkpoint = read_stage_checkpoint(path, APPAREL_STAGE)
    sections = checkpoint.manifest["config"]
    apparel = ApparelNetwork(
        ApparelConfig(**sections["apparel"]),
        int(checkpoint.manifest["num_joints"]),
        np.random.default_rng(0),
    )
    refine = RefineNetwork(RefineConfig(**sections["refine"]), np.random.default_rng(0))
    _restore(checkpoint, [apparel.store, refine.store])
    return apparel, refine


def _require(path: Path, stage: str) -> None:
    if not path.exists():
        raise MissingCheckpointException(
            f"stage {stage} needs the checkpoint {path}; train that stage first"
        )


def _log_epoch(stage: str, epoch: int, losses: List[float], step: int) -> None:
    Logger().info(
        event=LogEvent.TrainEpochEnd,
        stage=stage,
        epoch=epoch,
        loss=float(np.mean(losses)) if losses else 0.0,
        step=step,
    )


def _training_log_path(out_path: Path) -> Path:
    return out_path.with_suffix(".log")


def train_segmentation(
    config: Config, corpus: Corpus, out_path: Path, resume: bool = False
) -> SegmentationNetwork:
    """Fit the apparel classifier on the training characters with BCE against their ground
    truth masks."""
    logger = Logger()
    network = SegmentationNetwork(config.segmentation, np.random.default_rng(config.seed))
    first_epoch = 0
    if resume and out_path.exists():
        first_epoch = _restore(read_stage_checkpoint(out_path, SEGMENTATION_STAGE), [network.store])
    characters = [corpus.character(index) for index in corpus.character_indices()]
    sections = {"segmentation": json_section(config.segmentation)}
    with logger.log_to_file(_training_log_path(out_path)), logger.bind(stage=SEGMENTATION_STAGE):
        logger.info(event=LogEvent.TrainStageStart, first_epoch=first_epoch)
        for epoch in range(first_epoch, config.segmentation.epochs):
            rng = epoch_rng(config.seed, epoch)
            losses = []
            for index in rng.permutation(len(characters)):
                character = characters[index]
                network.store.zero_grad()
                with Tape() as tape:
                    loss = bce_loss(
                        network.probabilities(character.vertices),
                        character.apparel_mask_or_empty(),
                    )
                tape.backward(loss)
                adamw_step_from_config(network.store, config.optimizer)
                losses.append(loss.item())
            _log_epoch(SEGMENTATION_STAGE, epoch, losses, network.store.step)
            if _checkpoint_due(config, epoch, config.segmentation.epochs):
                save_checkpoint(
                    out_path,
                    SEGMENTATION_STAGE,
                    [network.store],
                    sections,
                    epoch + 1,
                    config.seed,
                    config.num_joints,
                )
        logger.info(event=LogEvent.TrainStageEnd, step=network.store.step)
    return network


def _checkpoint_due(config: Config, epoch: int, epochs: int) -> bool:
    return (epoch + 1) % config.training.checkpoint_every == 0 or epoch + 1 == epochs


def json_section(section: Any) -> Dict[str, Any]:
    """A config section as plain JSON types."""
    return json.loads(section.json())


class BodyExample(NamedTuple):
    """Fixed per-character inputs of the body stage."""

    character: RiggedCharacter
    body_indices: np.ndarray
    body_edges: np.ndarray


def _body_example(corpus: Corpus, index: int) -> BodyExample:
    character = corpus.character(index)
    geodesic = corpus.body_geodesic(index)
    body_mask = ~character.apparel_mask_or_empty()
    edges = relabel_edges(
        induced_edges(character.edges, body_mask), geodesic.body_indices, character.num_vertices
    )
    return BodyExample(
        character=character, body_indices=np.array(geodesic.body_indices), body_edges=edges
    )


def body_sample_loss(
    network: BodyNetwork,
    corpus: Corpus,
    data: SampleData,
    example: BodyExample,
    frames: np.ndarray,
    config: BodyConfig,
) -> Tensor:
    """Mean body loss over the given frames of one sample."""
    character = example.character
    weights = network.forward(character, corpus.body_geodesic(data.sample.character))
    rest = character.vertices[example.body_indices]
    total: Optional[Tensor] = None
    for frame in frames:
        predicted = lbs_deform(
            rest,
            weights,
            character.joints,
            data.motion.rotations[frame],
            data.motion.translations[frame],
        )
        losses = body_losses(
            predicted,
            data.ground_truth[frame][example.body_indices],
            rest,
            example.body_edges,
            weights,
            config,
        )
        total = losses.total if total is None else total + losses.total
    assert total is not None
    return total / float(len(frames))


def train_body(config: Config, corpus: Corpus, out_path: Path, resume: bool = False) -> BodyNetwork:
    """Fit the skinning predictor so that LBS with its weights reproduces the ground truth body
    of the training samples."""
    logger = Logger()
    network = BodyNetwork(config.body, config.num_joints, np.random.default_rng(config.seed))
    first_epoch = 0
    if resume and out_path.exists():
        first_epoch = _restore(read_stage_checkpoint(out_path, BODY_STAGE), [network.store])
    samples = corpus.samples(limit=config.training.max_train_samples)
    examples = {index: _body_example(corpus, index) for index in {s.character for s in samples}}
    sections = {"body": json_section(config.body)}
    with logger.log_to_file(_training_log_path(out_path)), logger.bind(
        stage=BODY_STAGE, variant=config.body.variant.value
    ):
        logger.info(event=LogEvent.TrainStageStart, first_epoch=first_epoch)
        for epoch in range(first_epoch, config.body.epochs):
            rng = epoch_rng(config.seed, epoch)
            losses = []
            for index in rng.permutation(len(samples)):
                data = corpus.load(samples[index])
                num_frames = len(data.ground_truth)
                frames = rng.choice(
                    np.arange(1, num_frames),
                    size=min(config.body.frames_per_step, num_frames - 1),
                    replace=False,
                )
                network.store.zero_grad()
                with Tape() as tape:
                    loss = body_sample_loss(
                        network, corpus, data, examples[data.sample.character], frames, config.body
                    )
                tape.backward(loss)
                adamw_step_from_config(network.store, config.optimizer)
                losses.append(loss.item())
            _log_epoch(BODY_STAGE, epoch, losses, network.store.step)
            if _checkpoint_due(config, epoch, config.body.epochs):
                save_checkpoint(
                    out_path,
                    BODY_STAGE,
                    [network.store],
                    sections,
                    epoch + 1,
                    config.seed,
                    config.num_joints,
                )
        logger.info(event=LogEvent.TrainStageEnd, step=network.store.step)
    return network


class ApparelExample(NamedTuple):
    """Per-character inputs of the apparel stage, fixed by the frozen segmentation and body
    networks."""

    character: RiggedCharacter
    mask: ApparelMask
    vertex_order: VertexOrder
    skinning: np.ndarray
    apparel_edges: np.ndarray
    adjacency: np.ndarray
    component_id: np.ndarray
    one_ring: sparse.csr_matrix


def apparel_example(
    character: RiggedCharacter, mask: ApparelMask, body: BodyNetwork
) -> ApparelExample:
    """Split character by mask and skin its body part with the body network."""
    vertex_order = VertexOrder.from_mask(mask.labels)
    skinning = np.zeros((0, character.num_joints))
    if len(vertex_order.body_indices):
        geodesic = compute_geodesic_matrix(character, ~mask.labels)
        skinning = body.skinning_weights(character, geodesic)
    apparel_edges = relabel_edges(
        induced_edges(character.edges, mask.labels),
        vertex_order.apparel_indices,
        character.num_vertices,
    )
    component_id = apparel_components(len(vertex_order.apparel_indices), apparel_edges)
    return ApparelExample(
        character=character,
        mask=mask,
        vertex_order=vertex_order,
        skinning=skinning,
        apparel_edges=apparel_edges,
        adjacency=grouped_adjacency(apparel_edges, component_id),
        component_id=component_id,
        one_ring=one_ring_mean_operator(character.num_vertices, character.edges),
    )


def skinned_body(example: ApparelExample, motion: MotionClip, frame: int) -> np.ndarray:
    character = example.character
    return linear_blend_skinning(
        character.vertices[example.vertex_order.body_indices],
        example.skinning,
        character.joints,
        motion.rotations[frame],
        motion.translations[frame],
    )


def root_positions(character: RiggedCharacter, motion: MotionClip) -> np.ndarray:
    """(T, 3) posed root joint position per frame."""
    root = character.root
    return character.joints[root] + motion.translations[:, root]


def apparel_window_loss(
    apparel: ApparelNetwork,
    refine: RefineNetwork,
    example: ApparelExample,
    data: SampleData,
    start: int,
    length: int,
    config: Config,
) -> Tensor:
    """Roll out frames start + 1 .. start + length from the ground truth history ending at
    start and return the mean apparel plus refinement loss over the window."""
    character = example.character
    apparel_rows = example.vertex_order.apparel_indices
    history_k = config.apparel.history_k
    history = [
        data.ground_truth[max(start - lag, 0)][apparel_rows] for lag in range(history_k)
    ]
    state = ApparelState(history, example.component_id, history_k)
    height = character.height
    features = motion_features(data.motion.rotations, data.motion.translations, height)
    roots = root_positions(character, data.motion)
    frames = np.arange(start + 1, start + length + 1)
    predictions = apparel.rollout(
        state, features[frames], roots[frames - 1], example.adjacency, first_frame=int(frames[0])
    )
    rest_apparel = character.vertices[apparel_rows]
    total: Optional[Tensor] = None
    for frame, predicted in zip(frames, predictions):
        target = data.ground_truth[frame]
        apparel_loss = apparel_losses(
            predicted, target[apparel_rows], rest_apparel, example.apparel_edges, config.apparel
        )
        refined, delta = refine.joint_refine(
            predicted,
            skinned_body(example, data.motion, frame),
            example.vertex_order,
            example.mask.probabilities,
            example.one_ring,
            roots[frame],
        )
        refine_loss = refine_losses(
            refined, target, character.vertices, character.edges, delta, config.refine
        )
        step_loss = apparel_loss.total + refine_loss.total
        total = step_loss if total is None else total + step_loss
    assert total is not None
    return total / float(length)


def train_apparel(
    config: Config,
    corpus: Corpus,
    segmentation_path: Path,
    body_path: Path,
    out_path: Path,
    resume: bool = False,
) -> Tuple[ApparelNetwork, RefineNetwork]:
    """Fit the apparel displacement field and the joint refinement end to end on windows of
    config.apparel.clip_len frames, with segmentation and body networks loaded frozen."""
    logger = Logger()
    _require(segmentation_path, SEGMENTATION_STAGE)
    _require(body_path, BODY_STAGE)
    segmentation = load_segmentation(segmentation_path)
    body = load_body(body_path)
    rng = np.random.default_rng(config.seed)
    apparel = ApparelNetwork(config.apparel, config.num_joints, rng)
    refine = RefineNetwork(config.refine, rng)
    stores = [apparel.store, refine.store]
    first_epoch = 0
    if resume and out_path.exists():
        first_epoch = _restore(read_stage_checkpoint(out_path, APPAREL_STAGE), stores)
    samples = corpus.samples(limit=config.training.max_train_samples)
    examples: Dict[int, ApparelExample] = {}
    for index in sorted({sample.character for sample in samples}):
        character = corpus.character(index)
        examples[index] = apparel_example(character, segmentation.segment(character), body)
    sections = {
        "apparel": json_section(config.apparel),
        "refine": json_section(config.refine),
    }
    with logger.log_to_file(_training_log_path(out_path)), logger.bind(stage=APPAREL_STAGE):
        logger.info(event=LogEvent.TrainStageStart, first_epoch=first_epoch)
        for epoch in range(first_epoch, config.apparel.epochs):
            rng = epoch_rng(config.seed, epoch)
            losses = []
            for index in rng.permutation(len(samples)):
                data = corpus.load(samples[index])
                example = examples[data.sample.character]
                if len(example.vertex_order.apparel_indices) == 0:
                    continue
                length = min(config.apparel.clip_len, len(data.ground_truth) - 1)
                starts = rng.integers(
                    0, len(data.ground_truth) - length, size=config.apparel.windows_per_sample
                )
                for start in starts:
                    for store in stores:
                        store.zero_grad()
                    with Tape() as tape:
                        loss = apparel_window_loss(
                            apparel, refine, example, data, int(start), length, config
                        )
                    tape.backward(loss)
                    for store in stores:
                        adamw_step_from_config(store, config.optimizer)
                    losses.append(loss.item())
            _log_epoch(APPAREL_STAGE, epoch, losses, apparel.store.step)
            if _checkpoint_due(config, epoch, config.apparel.epochs):
                save_checkpoint(
                    out_path,
                    APPAREL_STAGE,
                    stores,
                    sections,
                    epoch + 1,
                    config.seed,
                    config.num_joints,
                )
        logger.info(event=LogEvent.TrainStageEnd, step=apparel.store.step)
    return apparel, refine
