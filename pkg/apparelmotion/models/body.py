"""Skinning weight prediction with geodesic attention, and linear blend skinning."""
from typing import NamedTuple, Optional, Tuple

import numpy as np

from apparelmotion.core.config import BodyConfig, BodyVariant
from apparelmotion.geometry.character import RiggedCharacter
from apparelmotion.geometry.geodesic import GeodesicMatrix
from apparelmotion.geometry.skinning import joint_transformed_positions
from apparelmotion.models.exceptions import UntrainedModelException
from apparelmotion.models.losses import edge_length_loss, rest_edge_lengths, vertex_l1_loss
from apparelmotion.nn import ops
from apparelmotion.nn.exceptions import ShapeMismatchException
from apparelmotion.nn.layers import MLP
from apparelmotion.nn.parameters import ParameterStore
from apparelmotion.nn.tensor import Operand, Tensor, as_tensor


class BodyLosses(NamedTuple):
    vertex: Tensor
    edge: Tensor
    smooth: Tensor
    total: Tensor


class BodyNetwork:
    """Per-joint feature encoder, fusion of joint features (geodesic attention by default)
    and a point-set skinning predictor.

    Args:
        config: BodyConfig
        num_joints: skeleton size J
        rng: initialization generator
    """

    def __init__(self, config: BodyConfig, num_joints: int, rng: np.random.Generator):
        self.config = config
        self.num_joints = num_joints
        self.store = ParameterStore()
        dim = config.feature_dim
        self.joint_encoder = MLP(
            self.store, "body.joint_encoder", (4,) + config.feature_widths + (dim,), rng
        )
        self.attention: Optional[MLP] = None
        if config.variant == BodyVariant.ATTENTION:
            self.attention = MLP(
                self.store, "body.attention", (1,) + config.attention_widths + (1,), rng
            )
        self.top_k = min(config.sort_top_k, num_joints)
        fused_width = dim * self.top_k if config.variant == BodyVariant.SORT_GEODESIC else dim
        self.skin_encoder = MLP(
            self.store,
            "body.skin_encoder",
            (fused_width,) + config.encoder_widths,
            rng,
            activate_last=True,
        )
        self.skin_decoder = MLP(
            self.store,
            "body.skin_decoder",
            (2 * config.encoder_widths[-1],) + config.decoder_widths + (num_joints,),
            rng,
        )

    def per_joint_features(
        self, body_positions: np.ndarray, joints: np.ndarray, height: float
    ) -> Tensor:
        """P (N_b, J, D) from each vertex's offset to each joint and its length, in units of
        character height."""
        offsets = (body_positions[:, None, :] - joints[None, :, :]) / height
        lengths = np.linalg.norm(offsets, axis=-1, keepdims=True)
        return self.joint_encoder(np.concatenate([offsets, lengths], axis=-1))

    def geodesic_attention(
        self, distances: np.ndarray, features: Tensor, height: float
    ) -> Tuple[Tensor, Tensor]:
        """Attention M (N_b, J) over joints and fused features P' (N_b, D).

        The attention variant applies the learned per-entry map to G / height and a softmax
        over joints. The no-geodesic variant averages joints uniformly and the sort-geodesic
        variant concatenates the features of the top_k nearest joints (P' is (N_b, top_k * D),
        M marks the selected joints with 1 / top_k).
        """
        num_body, num_joints = distances.shape
        if features.shape[:2] != (num_body, num_joints):
            raise ShapeMismatchException(
                f"geodesic distances {distances.shape} and features {features.shape} disagree"
            )
        variant = self.config.variant
        if variant == BodyVariant.ATTENTION and self.attention is not None:
            logits = self.attention((distances / height)[:, :, None])
            attention = ops.softmax(ops.reshape(logits, (num_body, num_joints)), axis=1)
            return attention, ops.weighted_sum(attention, features)
        if variant == BodyVariant.NO_GEODESIC:
            uniform = np.full((num_body, num_joints), 1.0 / num_joints)
            return Tensor(uniform), ops.weighted_sum(uniform, features)
        nearest = np.argsort(distances, axis=1, kind="stable")[:, : self.top_k]
        selection = np.zeros((num_body, num_joints))
        np.put_along_axis(selection, nearest, 1.0 / self.top_k, axis=1)
        flat = ops.reshape(features, (num_body * num_joints, features.shape[2]))
        rows = (np.arange(num_body)[:, None] * num_joints + nearest).reshape(-1)
        selected = ops.reshape(ops.gather(flat, rows), (num_body, self.top_k * features.shape[2]))
        return Tensor(selection), selected

    def predict_skinning(self, fused: Operand) -> Tensor:
        """W (N_b, J): softmax over joints of the point-set decoder output."""
        encoded = self.skin_encoder(fused)
        context = ops.broadcast_to(ops.max_pool(encoded, axis=0), encoded.shape)
        return ops.softmax(self.skin_decoder(ops.concat([encoded, context], axis=-1)), axis=-1)

    def forward(self, character: RiggedCharacter, geodesic: GeodesicMatrix) -> Tensor:
        """Differentiable skinning weights of the body vertices rows of geodesic."""
        height = _height(character)
        features = self.per_joint_features(
            character.vertices[geodesic.body_indices], character.joints, height
        )
        _, fused = self.geodesic_attention(np.array(geodesic.distances), features, height)
        return self.predict_skinning(fused)

    def skinning_weights(self, character: RiggedCharacter, geodesic: GeodesicMatrix) -> np.ndarray:
        if not self.store.trained:
            raise UntrainedModelException("body parameters are not trained")
        return self.forward(character, geodesic).numpy()


def _height(character: RiggedCharacter) -> float:
    height = character.height
    return height if height > 0 else 1.0


def lbs_deform(
    positions: np.ndarray,
    weights: Operand,
    joints: np.ndarray,
    rotations: np.ndarray,
    translations: np.ndarray,
) -> Tensor:
    """Linear blend skinning, B_i = sum_j W_ij (R_j (B_i - J_j) + J_j + t_j).

    Args:
        positions: (N, 3) rest positions
        weights: (N, J) row-stochastic skinning weights
        joints: (J, 3) rest joint positions
        rotations: (J, 3, 3) joint rotations of the frame
        translations: (J, 3) scaled joint translations of the frame
    """
    weights = as_tensor(weights)
    if weights.shape != (len(positions), len(joints)):
        raise ShapeMismatchException(
            f"weights {weights.shape} do not match {(len(positions), len(joints))}"
        )
    carried = joint_transformed_positions(positions, joints, rotations, translations)
    return ops.weighted_sum(weights, carried)


def body_losses(
    predicted: Operand,
    target: np.ndarray,
    rest: np.ndarray,
    edges: np.ndarray,
    weights: Operand,
    config: Optional[BodyConfig] = None,
) -> BodyLosses:
    """Vertex L1, edge length and skinning smoothness losses of the body.

    Args:
        predicted: (N_b, 3) deformed body positions
        target: (N_b, 3) ground truth positions
        rest: (N_b, 3) rest positions
        edges: (E, 2) body edges in row indices of the arrays above
        weights: (N_b, J) skinning weights
        config: loss weights, BodyConfig defaults when None
    """
    config = config if config is not None else BodyConfig()
    vertex = vertex_l1_loss(predicted, target)
    edge = edge_length_loss(predicted, edges, rest_edge_lengths(rest, edges))
    weights = as_tensor(weights)
    if len(edges):
        smooth = ops.mean(
            ops.norm(ops.gather(weights, edges[:, 0]) - ops.gather(weights, edges[:, 1]), axis=-1)
        )
    else:
        smooth = Tensor(0.0)
    total = (
        config.lambda_vertex * vertex + config.lambda_edge * edge + config.lambda_smooth * smooth
    )
    return BodyLosses(vertex=vertex, edge=edge, smooth=smooth, total=total)
