"""Differentiable operations over `Tensor`.

Each op computes its result with numpy and registers the local gradient rule
through `make_result`. Broadcasting is limited to the trailing-dimension affine
case: one operand's shape must equal a suffix of the other's.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from objects.autograd.tensor import MASK_VALUE, Tensor, make_result
from objects.errors import DegenerateRowError, DimensionError, VocabularyError


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _suffix_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape == b.shape:
        return
    small, large = (a, b) if a.ndim < b.ndim else (b, a)
    if small.ndim == 0 or large.shape[large.ndim - small.ndim:] == small.shape:
        return
    raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not trailing-dimension compatible")


def _reduce_to(gradient: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if gradient.shape == shape:
        return gradient
    if len(shape) == 0:
        return np.asarray(gradient.sum(), dtype=gradient.dtype)
    return gradient.reshape((-1,) + shape).sum(axis=0)


def _normalize_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise DimensionError(f"axis {axis} out of range for rank {ndim}")
    return axis % ndim


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _suffix_broadcast(a, b, "add")

    def _backward(g: np.ndarray) -> None:
        a.accumulate(_reduce_to(g, a.shape))
        b.accumulate(_reduce_to(g, b.shape))

    return make_result(a.data + b.data, (a, b), "add", _backward)


def multiply(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _suffix_broadcast(a, b, "multiply")

    def _backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(_reduce_to(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate(_reduce_to(g * a.data, b.shape))

    return make_result(a.data * b.data, (a, b), "multiply", _backward)


def scale(x: Tensor, factor: float) -> Tensor:
    def _backward(g: np.ndarray) -> None:
        x.accumulate(g * factor)

    return make_result(x.data * factor, (x,), "scale", _backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes.

    `b` is either 2-D (a weight shared across a's leading axes) or has the same
    leading axes as `a`.
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions disagree for shapes {a.shape} and {b.shape}")
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise DimensionError(f"matmul: leading dimensions disagree for shapes {a.shape} and {b.shape}")
    k, n = b.shape[-2], b.shape[-1]

    def _backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(g @ np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            if b.ndim == 2:
                b.accumulate(a.data.reshape(-1, k).T @ g.reshape(-1, n))
            else:
                b.accumulate(np.swapaxes(a.data, -1, -2) @ g)

    return make_result(a.data @ b.data, (a, b), "matmul", _backward)


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; without `axes` the last two axes are swapped."""
    if axes is None:
        if x.ndim < 2:
            raise DimensionError(f"transpose needs rank >= 2, got shape {x.shape}")
        axes = list(range(x.ndim - 2)) + [x.ndim - 1, x.ndim - 2]
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError(f"transpose: {axes} is not a permutation of rank {x.ndim}")
    inverse = tuple(np.argsort(axes))

    def _backward(g: np.ndarray) -> None:
        x.accumulate(np.transpose(g, inverse))

    return make_result(np.transpose(x.data, axes), (x,), "transpose", _backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if -1 not in shape and math.prod(shape) != x.size:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}")
    try:
        data = x.data.reshape(shape)
    except ValueError as e:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}") from e

    def _backward(g: np.ndarray) -> None:
        x.accumulate(g.reshape(x.shape))

    return make_result(data, (x,), "reshape", _backward)


def broadcast_leading(x: Tensor, lead_shape: Sequence[int]) -> Tensor:
    """Repeat `x` over new leading axes; the gradient sums them back."""
    lead_shape = tuple(lead_shape)
    data = np.broadcast_to(x.data, lead_shape + x.shape).copy()

    def _backward(g: np.ndarray) -> None:
        x.accumulate(_reduce_to(g, x.shape))

    return make_result(data, (x,), "broadcast_leading", _backward)


def gelu(x: Tensor) -> Tensor:
    """tanh approximation of GELU."""
    c = math.sqrt(2.0 / math.pi)
    inner = c * (x.data + 0.044715 * x.data ** 3)
    t = np.tanh(inner)
    data = 0.5 * x.data * (1.0 + t)

    def _backward(g: np.ndarray) -> None:
        d_inner = c * (1.0 + 3 * 0.044715 * x.data ** 2)
        local = 0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t ** 2) * d_inner
        x.accumulate(g * local)

    return make_result(data, (x,), "gelu", _backward)


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis with max-subtraction.

    Entries at or below half the mask constant count as masked; a row with
    nothing else is degenerate.
    """
    if x.ndim == 0 or x.shape[-1] < 1:
        raise DimensionError(f"softmax_rows needs a non-empty last axis, got shape {x.shape}")
    blocked = np.all(x.data <= MASK_VALUE / 2, axis=-1)
    if np.any(blocked):
        raise DegenerateRowError(f"{int(blocked.sum())} softmax row(s) are entirely masked")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=-1, keepdims=True)

    def _backward(g: np.ndarray) -> None:
        x.accumulate(probs * (g - (g * probs).sum(axis=-1, keepdims=True)))

    return make_result(probs, (x,), "softmax_rows", _backward)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Plain-array log-softmax over the last axis (decoding, no tape)."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match width {d}")
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std
    data = normed * gain.data + bias.data

    def _backward(g: np.ndarray) -> None:
        if gain.requires_grad:
            gain.accumulate(_reduce_to(g * normed, gain.shape))
        if bias.requires_grad:
            bias.accumulate(_reduce_to(g, bias.shape))
        if x.requires_grad:
            d_normed = g * gain.data
            x.accumulate(
                inv_std / d * (
                    d * d_normed
                    - d_normed.sum(axis=-1, keepdims=True)
                    - normed * (d_normed * normed).sum(axis=-1, keepdims=True)
                )
            )

    return make_result(data, (x, gain, bias), "layer_norm", _backward)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    if not parts:
        raise DimensionError("concat needs at least one part")
    ndim = parts[0].ndim
    axis = _normalize_axis(axis, ndim)
    reference = parts[0].shape[:axis] + parts[0].shape[axis + 1:]
    for part in parts:
        if part.ndim != ndim or part.shape[:axis] + part.shape[axis + 1:] != reference:
            raise DimensionError(
                f"concat: non-axis dimensions differ: {[p.shape for p in parts]} along axis {axis}"
            )
    lengths = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + lengths)

    def _backward(g: np.ndarray) -> None:
        for part, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            if part.requires_grad:
                index = [slice(None)] * ndim
                index[axis] = slice(int(start), int(stop))
                part.accumulate(g[tuple(index)])

    return make_result(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), "concat", _backward)


def slice_axis(x: Tensor, start: int, stop: int, axis: int = 0) -> Tensor:
    axis = _normalize_axis(axis, x.ndim)
    if not 0 <= start <= stop <= x.shape[axis]:
        raise DimensionError(f"slice [{start}:{stop}] out of range for axis {axis} of shape {x.shape}")
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def _backward(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        full[index] = g
        x.accumulate(full)

    return make_result(x.data[index].copy(), (x,), "slice_axis", _backward)


def split(x: Tensor, lengths: Sequence[int], axis: int = 0) -> List[Tensor]:
    axis = _normalize_axis(axis, x.ndim)
    if sum(lengths) != x.shape[axis]:
        raise DimensionError(f"split lengths {list(lengths)} do not cover axis {axis} of shape {x.shape}")
    pieces, start = [], 0
    for length in lengths:
        pieces.append(slice_axis(x, start, start + length, axis))
        start += length
    return pieces


def embedding_lookup(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    vocab = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise VocabularyError(f"token id out of range [0, {vocab}): min {ids.min()}, max {ids.max()}")

    def _backward(g: np.ndarray) -> None:
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        table.accumulate(full)

    return make_result(table.data[ids], (table,), "embedding_lookup", _backward)


def mask_fill(x: Tensor, mask: np.ndarray, value: float = MASK_VALUE) -> Tensor:
    """Replace entries where `mask` is true; `mask` must match a trailing suffix of x's shape."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim > x.ndim or x.shape[x.ndim - mask.ndim:] != mask.shape:
        raise DimensionError(f"mask_fill: mask shape {mask.shape} does not fit tensor shape {x.shape}")
    data = np.where(mask, np.asarray(value, dtype=x.dtype), x.data)

    def _backward(g: np.ndarray) -> None:
        x.accumulate(np.where(mask, 0.0, g))

    return make_result(data, (x,), "mask_fill", _backward)


def cross_entropy_rows(logits: Tensor, targets) -> Tensor:
    """Per-row negative log-likelihood of `targets` under softmax(logits)."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise DimensionError(f"cross_entropy_rows: logits {logits.shape} vs targets {targets.shape}")
    vocab = logits.shape[1]
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise VocabularyError(f"target id out of range [0, {vocab})")
    rows = np.arange(logits.shape[0])
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    losses = np.log(total[:, 0]) - shifted[rows, targets]
    probs = exp / total

    def _backward(g: np.ndarray) -> None:
        local = probs.copy()
        local[rows, targets] -= 1.0
        logits.accumulate(local * g[:, None])

    return make_result(losses, (logits,), "cross_entropy_rows", _backward)


def sum_all(x: Tensor) -> Tensor:
    def _backward(g: np.ndarray) -> None:
        x.accumulate(np.broadcast_to(g, x.shape).copy())

    return make_result(np.asarray(x.data.sum(), dtype=x.dtype), (x,), "sum_all", _backward)
