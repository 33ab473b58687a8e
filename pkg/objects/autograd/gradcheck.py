"""Finite-difference gradient checks (run in 64-bit)."""
from typing import Callable, Optional, Sequence

import numpy as np

from objects.autograd.tensor import Tensor, backward, no_grad

LossFn = Callable[[], Tensor]


def numerical_gradient(loss_fn: LossFn, tensor: Tensor, indices: Sequence[int], h: float = 1e-5) -> np.ndarray:
    """Central differences of `loss_fn` w.r.t. the flat entries `indices` of `tensor`."""
    original = tensor.data
    estimates = np.zeros(len(indices), dtype=np.float64)
    try:
        for i, index in enumerate(indices):
            plus = original.copy()
            plus.flat[index] += h
            tensor.data = plus
            with no_grad():
                upper = loss_fn().item()
            minus = original.copy()
            minus.flat[index] -= h
            tensor.data = minus
            with no_grad():
                lower = loss_fn().item()
            estimates[i] = (upper - lower) / (2 * h)
    finally:
        tensor.data = original
    return estimates


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> np.ndarray:
    denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denominator


def check_gradients(
    loss_fn: LossFn,
    tensors: Sequence[Tensor],
    h: float = 1e-5,
    max_entries: Optional[int] = 10,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Max relative error between backprop and central differences.

    At most `max_entries` randomly chosen entries of each tensor are probed.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    for tensor in tensors:
        tensor.zero_grad()
    backward(loss_fn())
    worst = 0.0
    for tensor in tensors:
        analytic_full = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        if max_entries is None or tensor.size <= max_entries:
            indices = list(range(tensor.size))
        else:
            indices = sorted(rng.choice(tensor.size, size=max_entries, replace=False).tolist())
        analytic = analytic_full.reshape(-1)[indices].astype(np.float64)
        numeric = numerical_gradient(loss_fn, tensor, indices, h)
        worst = max(worst, float(relative_error(analytic, numeric).max(initial=0.0)))
    return worst
