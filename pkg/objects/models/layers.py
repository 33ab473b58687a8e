"""Transformer building blocks shared by the vision encoder, bridge and decoder.

Every block stores its weights in a `ParameterSet` under a dotted prefix and is
applied by looking them up again, so freezing is a matter of flags on names.
"""
import math
from typing import NamedTuple, Optional

import numpy as np

from objects.autograd import ops
from objects.autograd.tensor import Tensor
from objects.errors import DimensionError
from objects.models.parameters import ParameterSet


class SoftPromptLayer(NamedTuple):
    """Per-layer P-tuning prompts, each (soft_prompt_len, d_model)."""
    key: Tensor
    value: Tensor


def init_linear(params: ParameterSet, prefix: str, d_in: int, d_out: int, rng: np.random.Generator, zero: bool = False) -> None:
    if zero:
        params.zeros(f"{prefix}.weight", (d_in, d_out))
    else:
        params.normal(f"{prefix}.weight", (d_in, d_out), rng)
    params.zeros(f"{prefix}.bias", (d_out,))


def linear(params: ParameterSet, prefix: str, x: Tensor) -> Tensor:
    return ops.add(ops.matmul(x, params[f"{prefix}.weight"]), params[f"{prefix}.bias"])


def init_layer_norm(params: ParameterSet, prefix: str, d: int) -> None:
    params.ones(f"{prefix}.gain", (d,))
    params.zeros(f"{prefix}.bias", (d,))


def layer_norm(params: ParameterSet, prefix: str, x: Tensor) -> Tensor:
    return ops.layer_norm(x, params[f"{prefix}.gain"], params[f"{prefix}.bias"])


def init_mlp(params: ParameterSet, prefix: str, d: int, ratio: int, rng: np.random.Generator) -> None:
    init_linear(params, f"{prefix}.fc1", d, d * ratio, rng)
    init_linear(params, f"{prefix}.fc2", d * ratio, d, rng)


def mlp(params: ParameterSet, prefix: str, x: Tensor) -> Tensor:
    return linear(params, f"{prefix}.fc2", ops.gelu(linear(params, f"{prefix}.fc1", x)))


def init_attention(
    params: ParameterSet,
    prefix: str,
    d_model: int,
    rng: np.random.Generator,
    d_memory: Optional[int] = None,
    zero_output: bool = False,
) -> None:
    """Q/K/V/output projections; keys and values read from a `d_memory`-wide stream."""
    d_memory = d_model if d_memory is None else d_memory
    init_linear(params, f"{prefix}.q", d_model, d_model, rng)
    init_linear(params, f"{prefix}.k", d_memory, d_model, rng)
    init_linear(params, f"{prefix}.v", d_memory, d_model, rng)
    init_linear(params, f"{prefix}.out", d_model, d_model, rng, zero=zero_output)


def split_heads(x: Tensor, heads: int) -> Tensor:
    batch, seq, width = x.shape
    return ops.transpose(ops.reshape(x, (batch, seq, heads, width // heads)), (0, 2, 1, 3))


def merge_heads(x: Tensor) -> Tensor:
    batch, heads, seq, head_dim = x.shape
    return ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (batch, seq, heads * head_dim))


def _prompt_heads(prompt: Tensor, batch: int, heads: int) -> Tensor:
    length, width = prompt.shape
    per_head = ops.transpose(ops.reshape(prompt, (length, heads, width // heads)), (1, 0, 2))
    return ops.broadcast_leading(per_head, (batch,))


def attention_weights(q: Tensor, k: Tensor, blocked: Optional[np.ndarray] = None) -> Tensor:
    """softmax(q kᵀ / sqrt(d_k)) over (B, H, S, S') with `blocked` (S, S') entries masked."""
    scores = ops.scale(ops.matmul(q, ops.transpose(k)), 1.0 / math.sqrt(q.shape[-1]))
    if blocked is not None:
        if blocked.shape != scores.shape[-2:]:
            raise DimensionError(f"attention mask {blocked.shape} does not match scores {scores.shape[-2:]}")
        scores = ops.mask_fill(scores, blocked)
    return ops.softmax_rows(scores)


def attention(
    params: ParameterSet,
    prefix: str,
    hidden: Tensor,
    heads: int,
    memory: Optional[Tensor] = None,
    blocked: Optional[np.ndarray] = None,
    soft: Optional[SoftPromptLayer] = None,
) -> Tensor:
    """Multi-head attention of `hidden` over `memory` (itself when absent).

    With `soft`, per-head keys become concat(P_K, K) and values concat(P_V, V);
    the prompt columns are never blocked.
    """
    memory = hidden if memory is None else memory
    batch = hidden.shape[0]
    q = split_heads(linear(params, f"{prefix}.q", hidden), heads)
    k = split_heads(linear(params, f"{prefix}.k", memory), heads)
    v = split_heads(linear(params, f"{prefix}.v", memory), heads)
    if soft is not None and soft.key.shape[0] > 0:
        k = ops.concat([_prompt_heads(soft.key, batch, heads), k], axis=2)
        v = ops.concat([_prompt_heads(soft.value, batch, heads), v], axis=2)
        if blocked is not None:
            open_columns = np.zeros((blocked.shape[0], soft.key.shape[0]), dtype=bool)
            blocked = np.concatenate([open_columns, blocked], axis=1)
    context = ops.matmul(attention_weights(q, k, blocked), v)
    return linear(params, f"{prefix}.out", merge_heads(context))


def causal_mask(length: int, bidirectional_prefix: int = 0) -> np.ndarray:
    """Boolean (length, length) matrix, True where attention is blocked.

    The first `bidirectional_prefix` positions see each other freely (prefix-LM).
    """
    blocked = np.triu(np.ones((length, length), dtype=bool), k=1)
    if bidirectional_prefix:
        blocked[:bidirectional_prefix, :bidirectional_prefix] = False
    return blocked
