from dataclasses import dataclass

import numpy as np

from objects.autograd import ops
from objects.autograd.tensor import Tensor
from objects.errors import DimensionError, EmptyTargetError


@dataclass
class NLLResult:
    """Token-mean loss on the tape plus the plain sum it was derived from."""
    mean: Tensor
    total: float
    tokens: int


def nll_loss(logits: Tensor, targets, pad_mask) -> NLLResult:
    """-Σ log p(y_t | y_<t, x, I) over target positions where `pad_mask` is False.

    `logits` is (T, V) or (B, T, V); `targets` and `pad_mask` match its leading shape.
    """
    targets = np.asarray(targets, dtype=np.int64)
    pad_mask = np.asarray(pad_mask, dtype=bool)
    if targets.shape != logits.shape[:-1] or pad_mask.shape != targets.shape:
        raise DimensionError(
            f"logits {logits.shape}, targets {targets.shape} and pad mask {pad_mask.shape} disagree"
        )
    keep = ~pad_mask.reshape(-1)
    count = int(keep.sum())
    if count == 0:
        raise EmptyTargetError("every target position is padding")
    rows = ops.cross_entropy_rows(ops.reshape(logits, (-1, logits.shape[-1])), targets.reshape(-1))
    weights = Tensor(keep.astype(logits.dtype) / count)
    mean = ops.sum_all(ops.multiply(rows, weights))
    return NLLResult(mean=mean, total=float(rows.data[keep].sum()), tokens=count)
