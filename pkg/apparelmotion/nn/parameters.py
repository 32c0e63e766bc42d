"""Named trainable arrays."""
from collections import OrderedDict
from typing import Any, Dict, Iterator, Optional, Tuple

import numpy as np

from apparelmotion.nn.exceptions import ShapeMismatchException, UnknownParameterException
from apparelmotion.nn.tensor import Tensor

MOMENT1_PREFIX = "__m__."
MOMENT2_PREFIX = "__v__."


class Parameter(Tensor):
    """A Tensor owned by a ParameterStore, with AdamW moment buffers."""

    def __init__(self, value: Any, name: str):
        super().__init__(value, requires_grad=True, name=name)
        self.grad = np.zeros_like(self.value)
        self.moment1 = np.zeros_like(self.value)
        self.moment2 = np.zeros_like(self.value)


def glorot_uniform(
    rng: np.random.Generator, fan_in: int, fan_out: int, shape: Tuple[int, ...]
) -> np.ndarray:
    """uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class ParameterStore:
    """An ordered collection of named Parameters plus the optimizer step counter.

    `trained` becomes True once an optimizer step ran or trained values were loaded; models
    refuse inference on untrained stores.
    """

    def __init__(self) -> None:
        self._parameters: "OrderedDict[str, Parameter]" = OrderedDict()
        self.step = 0
        self.trained = False

    def __contains__(self, name: str) -> bool:
        return name in self._parameters

    def __getitem__(self, name: str) -> Parameter:
        try:
            return self._parameters[name]
        except KeyError as ke:
            raise UnknownParameterException(f"No parameter named {name}") from ke

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._parameters.values())

    def __len__(self) -> int:
        return len(self._parameters)

    def names(self) -> Tuple[str, ...]:
        return tuple(self._parameters)

    def num_values(self) -> int:
        return int(sum(p.value.size for p in self))

    def add(self, name: str, value: np.ndarray) -> Parameter:
        if name in self._parameters:
            raise UnknownParameterException(f"Parameter {name} already exists")
        parameter = Parameter(value, name=name)
        self._parameters[name] = parameter
        return parameter

    def add_weight(
        self, name: str, fan_in: int, fan_out: int, rng: np.random.Generator
    ) -> Parameter:
        return self.add(name, glorot_uniform(rng, fan_in, fan_out, (fan_in, fan_out)))

    def add_bias(self, name: str, size: int) -> Parameter:
        return self.add(name, np.zeros(size))

    def zero_grad(self) -> None:
        for parameter in self:
            parameter.grad = np.zeros_like(parameter.value)

    def state_arrays(self, prefix: str = "") -> Dict[str, np.ndarray]:
        """Values and moment buffers keyed for a checkpoint."""
        arrays: Dict[str, np.ndarray] = {}
        for name, parameter in self._parameters.items():
            arrays[prefix + name] = parameter.value
            arrays[MOMENT1_PREFIX + prefix + name] = parameter.moment1
            arrays[MOMENT2_PREFIX + prefix + name] = parameter.moment2
        return arrays

    def load_state_arrays(
        self, arrays: Dict[str, np.ndarray], prefix: str = "", step: Optional[int] = None
    ) -> None:
        """Copy values (and moment buffers when present) from checkpoint arrays."""
        for name, parameter in self._parameters.items():
            key = prefix + name
            if key not in arrays:
                raise UnknownParameterException(f"Checkpoint holds no parameter {key}")
            value = np.asarray(arrays[key], dtype=np.float64)
            if value.shape != parameter.shape:
                raise ShapeMismatchException(
                    f"Checkpoint parameter {key} has shape {value.shape}, "
                    f"model expects {parameter.shape}"
                )
            parameter.value[...] = value
            parameter.moment1[...] = arrays.get(MOMENT1_PREFIX + key, 0.0)
            parameter.moment2[...] = arrays.get(MOMENT2_PREFIX + key, 0.0)
        if step is not None:
            self.step = step
        self.trained = True
