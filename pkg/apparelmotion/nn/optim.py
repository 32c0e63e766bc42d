"""AdamW with decoupled weight decay."""
from typing import Tuple

import numpy as np

from apparelmotion.core.config import OptimizerConfig
from apparelmotion.core.log import Logger
from apparelmotion.core.log_events import LogEvent
from apparelmotion.nn.parameters import ParameterStore


def adamw_step(
    store: ParameterStore,
    lr: float = 1e-4,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> None:
    """One AdamW update of every parameter in store from its accumulated gradient.

    Weight decay is applied to the weights before the moment update, w <- w - lr * wd * w. A
    parameter whose gradient is not finite is skipped and its gradient zeroed.
    """
    logger = Logger()
    beta1, beta2 = betas
    store.step += 1
    bias_correction1 = 1.0 - beta1**store.step
    bias_correction2 = 1.0 - beta2**store.step
    for parameter in store:
        grad = parameter.grad if parameter.grad is not None else np.zeros_like(parameter.value)
        if not np.all(np.isfinite(grad)):
            logger.warning(
                event=LogEvent.NonFiniteGradient, parameter=parameter.name, step=store.step
            )
            parameter.grad = np.zeros_like(parameter.value)
            continue
        parameter.value *= 1.0 - lr * weight_decay
        parameter.moment1 *= beta1
        parameter.moment1 += (1.0 - beta1) * grad
        parameter.moment2 *= beta2
        parameter.moment2 += (1.0 - beta2) * grad * grad
        corrected1 = parameter.moment1 / bias_correction1
        corrected2 = parameter.moment2 / bias_correction2
        parameter.value -= lr * corrected1 / (np.sqrt(corrected2) + eps)
    store.trained = True


def adamw_step_from_config(store: ParameterStore, config: OptimizerConfig) -> None:
    adamw_step(
        store,
        lr=config.lr,
        betas=(config.beta1, config.beta2),
        eps=config.eps,
        weight_decay=config.weight_decay,
    )
