from typing import Callable, Sequence

import numpy as np

from app.core.exceptions import ContractError
from app.core.tensor import Tensor, no_grad


def numeric_gradient(fn: Callable[[], Tensor], t: Tensor, h: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar-valued ``fn`` with respect to ``t``."""
    grad = np.zeros_like(t.data)
    flat = t.data.reshape(-1)
    out = grad.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            plus = float(fn().data)
            flat[i] = saved - h
            minus = float(fn().data)
            flat[i] = saved
            out[i] = (plus - minus) / (2.0 * h)
    return grad


def gradient_check(fn: Callable[[], Tensor], tensors: Sequence[Tensor], h: float = 1e-5) -> float:
    """
    Largest relative error, ``|analytic - numeric| / max(|analytic|, |numeric|)``
    measured in the Euclidean norm, over every tensor in ``tensors``.
    """
    for t in tensors:
        if not t.requires_grad:
            raise ContractError(f"{t!r} does not require gradients")
        t.grad = None
    fn().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]

    worst = 0.0
    for t, a in zip(tensors, analytic):
        n = numeric_gradient(fn, t, h)
        scale = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
        worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst
