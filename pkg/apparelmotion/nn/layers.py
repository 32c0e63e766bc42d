"""Layers whose parameters live in a ParameterStore."""
from typing import List, Sequence

import numpy as np

from apparelmotion.nn import ops
from apparelmotion.nn.exceptions import ShapeMismatchException
from apparelmotion.nn.parameters import Parameter, ParameterStore
from apparelmotion.nn.tensor import Operand, Tensor, as_tensor


class Linear:
    """Affine map applied to the last axis."""

    def __init__(
        self,
        store: ParameterStore,
        name: str,
        fan_in: int,
        fan_out: int,
        rng: np.random.Generator,
    ):
        self.weight: Parameter = store.add_weight(f"{name}.weight", fan_in, fan_out, rng)
        self.bias: Parameter = store.add_bias(f"{name}.bias", fan_out)

    @property
    def fan_in(self) -> int:
        return self.weight.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[1]

    def __call__(self, x: Operand) -> Tensor:
        return ops.dense(x, self.weight, self.bias)


class MLP:
    """Linear layers with ReLU between them.

    Args:
        store: store receiving the parameters
        name: parameter name prefix
        widths: layer widths including input and output, e.g. (3, 64, 128)
        rng: initialization generator
        activate_last: apply ReLU after the last layer too
    """

    def __init__(
        self,
        store: ParameterStore,
        name: str,
        widths: Sequence[int],
        rng: np.random.Generator,
        activate_last: bool = False,
    ):
        if len(widths) < 2:
            raise ShapeMismatchException(f"an MLP needs at least two widths, got {tuple(widths)}")
        self.widths = tuple(widths)
        self.activate_last = activate_last
        self.layers: List[Linear] = [
            Linear(store, f"{name}.{index}", fan_in, fan_out, rng)
            for index, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:]))
        ]

    def __call__(self, x: Operand) -> Tensor:
        out = as_tensor(x)
        if out.shape[-1] != self.widths[0]:
            raise ShapeMismatchException(
                f"MLP expects {self.widths[0]} input channels, got shape {out.shape}"
            )
        for index, layer in enumerate(self.layers):
            out = layer(out)
            if index < len(self.layers) - 1 or self.activate_last:
                out = ops.relu(out)
        return out
