"""Autoregressive apparel displacement field with grouped edge convolutions."""
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from apparelmotion.core.config import ApparelConfig
from apparelmotion.geometry.mesh import connected_component_labels
from apparelmotion.models.exceptions import (
    NonFiniteDisplacementException,
    UntrainedModelException,
    WarmupIncompleteException,
)
from apparelmotion.models.losses import edge_length_loss, rest_edge_lengths, vertex_l1_loss
from apparelmotion.nn import ops
from apparelmotion.nn.exceptions import ShapeMismatchException
from apparelmotion.nn.layers import MLP, Linear
from apparelmotion.nn.parameters import ParameterStore
from apparelmotion.nn.tensor import Operand, Tensor, as_tensor

TRANSFORM_WIDTH = 12
KINEMATIC_CHANNELS = 9


class ApparelLosses(NamedTuple):
    vertex: Tensor
    edge: Tensor
    total: Tensor


class ApparelState:
    """Apparel positions of the last history_k frames, newest first, plus the connected
    component label of every apparel vertex.

    States are values: push returns a new state.
    """

    def __init__(self, history: Sequence[Operand], component_id: np.ndarray, history_k: int = 3):
        self.history: List[Tensor] = [as_tensor(positions) for positions in history][:history_k]
        self.component_id = np.asarray(component_id, dtype=np.int64)
        self.history_k = history_k

    @classmethod
    def from_rest(
        cls, rest_positions: np.ndarray, component_id: np.ndarray, history_k: int = 3
    ) -> "ApparelState":
        return cls([rest_positions] * history_k, component_id, history_k)

    @property
    def positions(self) -> Tensor:
        return self.history[0]

    @property
    def is_warm(self) -> bool:
        return len(self.history) >= self.history_k

    def push(self, positions: Operand) -> "ApparelState":
        return ApparelState([positions] + self.history, self.component_id, self.history_k)


def apparel_components(num_apparel: int, apparel_edges: np.ndarray) -> np.ndarray:
    """Connected component label per apparel vertex from edges in apparel-local indices."""
    return connected_component_labels(num_apparel, apparel_edges)


def grouped_adjacency(apparel_edges: np.ndarray, component_id: np.ndarray) -> np.ndarray:
    """Directed (center, neighbor) pairs of every undirected edge whose end points share a
    component, in both directions."""
    edges = np.asarray(apparel_edges, dtype=np.int64).reshape(-1, 2)
    edges = edges[component_id[edges[:, 0]] == component_id[edges[:, 1]]]
    return np.concatenate([edges, edges[:, ::-1]], axis=0)


def motion_features(rotations: np.ndarray, translations: np.ndarray, height: float) -> np.ndarray:
    """(T, J * 12) joint transforms with translations in units of character height."""
    num_frames, num_joints = rotations.shape[:2]
    return np.concatenate(
        [rotations.reshape(num_frames, num_joints, 9), translations / height], axis=2
    ).reshape(num_frames, num_joints * TRANSFORM_WIDTH)


def edge_conv(
    features: Operand, adjacency: np.ndarray, edge_fn: Callable[[Tensor], Tensor]
) -> Tensor:
    """out_i = max over neighbors j of edge_fn(H_i concatenated with H_j - H_i); a node
    without neighbors gets the zero vector."""
    return ops.neighborhood_max(
        features,
        adjacency,
        lambda center, neighbor: edge_fn(ops.concat([center, neighbor - center], axis=-1)),
    )


class EdgeConvBlock:
    """edge_conv with an MLP edge function plus a skip connection (a linear projection when
    the width changes, identity otherwise)."""

    def __init__(
        self,
        store: ParameterStore,
        name: str,
        in_width: int,
        out_width: int,
        rng: np.random.Generator,
    ):
        self.edge_mlp = MLP(
            store, f"{name}.edge", (2 * in_width, out_width, out_width), rng, activate_last=True
        )
        self.skip: Optional[Linear] = None
        if in_width != out_width:
            self.skip = Linear(store, f"{name}.skip", in_width, out_width, rng)

    def __call__(self, features: Tensor, adjacency: np.ndarray) -> Tensor:
        residual = features if self.skip is None else self.skip(features)
        return edge_conv(features, adjacency, self.edge_mlp) + residual


class ApparelNetwork:
    """f_t motion encoder, stacked grouped edge convolutions and the displacement decoder.

    Args:
        config: ApparelConfig
        num_joints: skeleton size J
        rng: initialization generator
    """

    def __init__(self, config: ApparelConfig, num_joints: int, rng: np.random.Generator):
        self.config = config
        self.num_joints = num_joints
        self.store = ParameterStore()
        self.motion_encoder = MLP(
            self.store,
            "apparel.motion",
            (num_joints * TRANSFORM_WIDTH,) + config.motion_widths + (config.m_dim,),
            rng,
        )
        widths = [KINEMATIC_CHANNELS + config.m_dim]
        widths += [config.hidden_width] * config.edge_conv_blocks
        self.blocks = [
            EdgeConvBlock(self.store, f"apparel.block{index}", fan_in, fan_out, rng)
            for index, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:]))
        ]
        self.decoder = MLP(
            self.store, "apparel.decoder", (widths[-1],) + config.decoder_widths + (3,), rng
        )

    @property
    def feature_width(self) -> int:
        return KINEMATIC_CHANNELS + self.config.m_dim

    def assemble_features(
        self, state: ApparelState, frame_features: np.ndarray, previous_root: np.ndarray
    ) -> Tensor:
        """H (N_a, 9 + m_dim): position relative to the root joint of frame t-1, velocity and
        acceleration of frame t-1, then f_t of frame t broadcast to every vertex.

        Args:
            state: history ending at frame t-1
            frame_features: (J * 12,) motion_features row of frame t
            previous_root: (3,) root joint position at frame t-1
        """
        if not state.is_warm:
            raise WarmupIncompleteException(
                f"warm-up incomplete: {len(state.history)} of {state.history_k} history frames"
            )
        if np.shape(frame_features) != (self.num_joints * TRANSFORM_WIDTH,):
            raise ShapeMismatchException(
                f"frame features {np.shape(frame_features)} do not match "
                f"{(self.num_joints * TRANSFORM_WIDTH,)}"
            )
        newest, middle, oldest = state.history[0], state.history[1], state.history[2]
        velocity = newest - middle
        acceleration = newest - 2.0 * middle + oldest
        motion = self.motion_encoder(frame_features[None, :])
        motion = ops.broadcast_to(motion, (len(newest), self.config.m_dim))
        return ops.concat([newest - previous_root, velocity, acceleration, motion], axis=-1)

    def grouped_edge_conv_stack(self, features: Tensor, adjacency: np.ndarray) -> Tensor:
        for block in self.blocks:
            features = block(features, adjacency)
        return features

    def displacement(
        self,
        state: ApparelState,
        frame_features: np.ndarray,
        previous_root: np.ndarray,
        adjacency: np.ndarray,
    ) -> Tensor:
        features = self.assemble_features(state, frame_features, previous_root)
        return self.decoder(self.grouped_edge_conv_stack(features, adjacency))

    def rollout(
        self,
        state: ApparelState,
        frame_features: np.ndarray,
        previous_roots: np.ndarray,
        adjacency: np.ndarray,
        first_frame: int = 0,
    ) -> List[Tensor]:
        """Predict positions for len(frame_features) consecutive frames, each prediction
        becoming the newest history entry of the next.

        Args:
            state: warm history ending right before the first predicted frame
            frame_features: (T, J * 12) motion_features rows of the predicted frames
            previous_roots: (T, 3) root positions of the frame before each predicted frame
            adjacency: grouped_adjacency of the apparel graph
            first_frame: clip index of the first predicted frame, for error messages

        Returns:
            T position Tensors (N_a, 3)
        """
        predictions: List[Tensor] = []
        for step, (features, root) in enumerate(zip(frame_features, previous_roots)):
            delta = self.displacement(state, features, root, adjacency)
            if not np.all(np.isfinite(delta.value)):
                raise NonFiniteDisplacementException(
                    f"non-finite apparel displacement at frame {first_frame + step}"
                )
            positions = state.positions + delta
            predictions.append(positions)
            state = state.push(positions)
        return predictions

    def require_trained(self) -> None:
        if not self.store.trained:
            raise UntrainedModelException("apparel parameters are not trained")


def apparel_losses(
    predicted: Operand,
    target: np.ndarray,
    rest: np.ndarray,
    apparel_edges: np.ndarray,
    config: Optional[ApparelConfig] = None,
) -> ApparelLosses:
    """Vertex L1 and edge length losses of one apparel frame (apparel-local edge indices)."""
    config = config if config is not None else ApparelConfig()
    vertex = vertex_l1_loss(predicted, target)
    edge = edge_length_loss(predicted, apparel_edges, rest_edge_lengths(rest, apparel_edges))
    total = config.lambda_vertex * vertex + config.lambda_edge * edge
    return ApparelLosses(vertex=vertex, edge=edge, total=total)
