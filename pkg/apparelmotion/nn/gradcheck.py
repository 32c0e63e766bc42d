"""Central finite-difference gradient checking."""
from typing import Callable, List, Optional, Sequence

import numpy as np

from apparelmotion.core.base_model import BaseImmutableModel
from apparelmotion.nn.tensor import Tape, Tensor

DEFAULT_EPS = 1e-5
DEFAULT_SCALE_FLOOR = 1e-3
KINK_TOLERANCE = 1e-2


class GradientCheckResult(BaseImmutableModel):
    """Outcome of check_gradients.

    Args:
        max_relative_error: worst |analytic - numeric| / max(|analytic|, |numeric|, floor)
        num_checked: entries compared
        num_skipped: entries skipped because the loss is not differentiable within eps
    """

    max_relative_error: float
    num_checked: int
    num_skipped: int


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    eps: float = DEFAULT_EPS,
    scale_floor: float = DEFAULT_SCALE_FLOOR,
    max_entries: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> GradientCheckResult:
    """Compare tape gradients of loss_fn() with respect to tensors against central differences.

    loss_fn must rebuild the loss from the current values of tensors. Entries where the one-sided
    differences disagree (a ReLU or max switching inside [x - eps, x + eps]) are skipped.

    Args:
        loss_fn: builds a scalar loss Tensor
        tensors: tensors requiring gradients whose values are perturbed in place
        eps: central difference step
        scale_floor: lower bound of the relative error denominator
        max_entries: compare at most this many randomly chosen entries per tensor
        rng: generator choosing entries when max_entries is set
    """
    for tensor in tensors:
        tensor.grad = np.zeros_like(tensor.value)
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic: List[np.ndarray] = [np.array(tensor.grad) for tensor in tensors]
    base = float(loss.value)

    worst, checked, skipped = 0.0, 0, 0
    rng = rng if rng is not None else np.random.default_rng(0)
    for tensor, grad in zip(tensors, analytic):
        flat_indices = np.arange(tensor.value.size)
        if max_entries is not None and len(flat_indices) > max_entries:
            flat_indices = np.sort(rng.choice(flat_indices, size=max_entries, replace=False))
        for flat_index in flat_indices:
            index = np.unravel_index(flat_index, tensor.shape)
            original = tensor.value[index]
            tensor.value[index] = original + eps
            plus = float(loss_fn().value)
            tensor.value[index] = original - eps
            minus = float(loss_fn().value)
            tensor.value[index] = original
            forward, backward = (plus - base) / eps, (base - minus) / eps
            scale = max(np.abs(forward), np.abs(backward), 1.0)
            if np.abs(forward - backward) > KINK_TOLERANCE * scale:
                skipped += 1
                continue
            numeric = (plus - minus) / (2.0 * eps)
            denominator = max(np.abs(grad[index]), np.abs(numeric), scale_floor)
            worst = max(worst, float(np.abs(grad[index] - numeric) / denominator))
            checked += 1
    return GradientCheckResult(max_relative_error=worst, num_checked=checked, num_skipped=skipped)
