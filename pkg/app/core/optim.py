from typing import Sequence, Tuple

import numpy as np

from app.core.exceptions import ParameterError
from app.core.tensor import Parameter
from app.schemas.training import AdamConfig


def he_init(shape: Tuple[int, ...], fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """
    Zero-mean normal samples with standard deviation sqrt(2 / fan_in)
    """
    if fan_in <= 0:
        raise ParameterError(f"fan_in must be positive, got {fan_in}")
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def adam_step(params: Sequence[Parameter], cfg: AdamConfig) -> None:
    """
    One Adam update with bias correction.

    Weight decay is folded into the gradient before the moment updates.
    Increments ``cfg.step_count`` and zeroes every gradient afterwards.
    """
    cfg.step_count += 1
    t = cfg.step_count
    correction1 = 1.0 - cfg.beta1 ** t
    correction2 = 1.0 - cfg.beta2 ** t

    for p in params:
        grad = p.grad
        if cfg.weight_decay:
            grad = grad + cfg.weight_decay * p.data
        p.adam_m *= cfg.beta1
        p.adam_m += (1.0 - cfg.beta1) * grad
        p.adam_v *= cfg.beta2
        p.adam_v += (1.0 - cfg.beta2) * grad * grad
        m_hat = p.adam_m / correction1
        v_hat = p.adam_v / correction2
        p.data -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        p.grad = np.zeros_like(p.data)
