"""Per-vertex apparel/body classification with a point-set encoder."""
from typing import Any, Dict, Optional

import numpy as np
from pydantic import root_validator, validator

from apparelmotion.core.base_model import BaseImmutableModel, frozen_array
from apparelmotion.core.config import SegmentationConfig
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.models.exceptions import UntrainedModelException
from apparelmotion.nn import ops
from apparelmotion.nn.exceptions import ShapeMismatchException
from apparelmotion.nn.layers import MLP
from apparelmotion.nn.parameters import ParameterStore
from apparelmotion.nn.tensor import Operand, Tensor, as_tensor

PROBABILITY_CLAMP = 1e-7


class ApparelMask(BaseImmutableModel):
    """Apparel probabilities and labels. A vertex is apparel only when its probability is
    strictly above the threshold, so ties go to the body."""

    probabilities: np.ndarray
    labels: np.ndarray
    threshold: float = 0.5

    # pylint: disable=no-self-argument
    @validator("probabilities", pre=True)
    def probability_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value).reshape(-1)

    @validator("labels", pre=True)
    def label_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value, dtype=bool).reshape(-1)

    @root_validator(skip_on_failure=True)
    def same_length(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["probabilities"].shape != values["labels"].shape:
            raise ShapeMismatchException(
                f"probabilities {values['probabilities'].shape} and labels "
                f"{values['labels'].shape} differ"
            )
        return values

    @classmethod
    def from_probabilities(cls, probabilities: np.ndarray, threshold: float = 0.5) -> "ApparelMask":
        probabilities = np.asarray(probabilities, dtype=np.float64)
        return cls(
            probabilities=probabilities, labels=probabilities > threshold, threshold=threshold
        )

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "ApparelMask":
        """A mask with hard 0/1 probabilities, e.g. from ground truth."""
        labels = np.asarray(labels, dtype=bool)
        return cls(probabilities=labels.astype(np.float64), labels=labels)

    @property
    def num_apparel(self) -> int:
        return int(self.labels.sum())

    @property
    def num_body(self) -> int:
        return len(self.labels) - self.num_apparel

    @property
    def apparel_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels)

    @property
    def body_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.labels)


def normalize_positions(vertices: np.ndarray) -> np.ndarray:
    """Center on the mean vertex and scale to unit height."""
    height = np.ptp(vertices[:, 1])
    return (vertices - vertices.mean(axis=0)) / (height if height > 0 else 1.0)


class SegmentationNetwork:
    """Shared per-vertex MLP, global max pool concatenated back per vertex, MLP decoder to one
    logit per vertex."""

    def __init__(self, config: SegmentationConfig, rng: np.random.Generator):
        self.config = config
        self.store = ParameterStore()
        self.encoder = MLP(
            self.store,
            "segmentation.encoder",
            (3,) + config.encoder_widths,
            rng,
            activate_last=True,
        )
        feature_width = config.encoder_widths[-1]
        self.decoder = MLP(
            self.store,
            "segmentation.decoder",
            (2 * feature_width,) + config.decoder_widths + (1,),
            rng,
        )

    def logits(self, vertices: np.ndarray) -> Tensor:
        features = self.encoder(normalize_positions(vertices))
        context = ops.broadcast_to(ops.max_pool(features, axis=0), features.shape)
        logits = self.decoder(ops.concat([features, context], axis=-1))
        return ops.reshape(logits, (len(vertices),))

    def probabilities(self, vertices: np.ndarray) -> Tensor:
        return ops.sigmoid(self.logits(vertices))

    def segment(self, character: RiggedCharacter) -> ApparelMask:
        if not self.store.trained:
            raise UntrainedModelException("segmentation parameters are not trained")
        probabilities = self.probabilities(character.vertices).numpy()
        return ApparelMask.from_probabilities(probabilities, self.config.threshold)


def bce_loss(probabilities: Operand, gt_mask: np.ndarray, clamp: Optional[float] = None) -> Tensor:
    """Mean binary cross entropy of probabilities against 0/1 targets, with probabilities
    clamped to [clamp, 1 - clamp].

    >>> round(float(bce_loss(np.array([0.9, 0.2]), np.array([1, 0])).value), 6)
    0.164252
    """
    clamp = PROBABILITY_CLAMP if clamp is None else clamp
    probabilities = ops.clip(as_tensor(probabilities), clamp, 1.0 - clamp)
    targets = np.asarray(gt_mask, dtype=np.float64)
    if targets.shape != probabilities.shape:
        raise ShapeMismatchException(
            f"probabilities {probabilities.shape} and targets {targets.shape} differ"
        )
    log_likelihood = targets * ops.log(probabilities) + (1.0 - targets) * ops.log(
        1.0 - probabilities
    )
    return -ops.mean(log_likelihood)
