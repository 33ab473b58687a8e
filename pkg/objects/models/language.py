from typing import Optional, Sequence

import numpy as np

from objects.autograd import ops
from objects.autograd.tensor import Tensor
from objects.datasets.vocabulary import BOS_ID
from objects.errors import DimensionError, LengthError
from objects.models import layers
from objects.models.config import LMConfig
from objects.models.layers import SoftPromptLayer
from objects.models.parameters import ParameterSet

PREFIX = "lm"
SOFT_PREFIX = "soft_prompts"


def count_ptuning_params(depth: int, soft_prompt_len: int, d_lm: int) -> int:
    return depth * 2 * soft_prompt_len * d_lm


def self_attention_ptuned(
    hidden: Tensor,
    params: ParameterSet,
    prefix: str,
    heads: int,
    soft: Optional[SoftPromptLayer],
    blocked: Optional[np.ndarray],
) -> Tensor:
    """Causal self-attention whose keys/values are extended with the layer's soft prompts."""
    if hidden.shape[1] < 1:
        raise DimensionError("self-attention needs at least one position")
    if blocked is not None and blocked.shape != (hidden.shape[1], hidden.shape[1]):
        raise DimensionError(f"mask shape {blocked.shape} does not match sequence length {hidden.shape[1]}")
    return layers.attention(params, prefix, hidden, heads, blocked=blocked, soft=soft)


class LanguageModel:
    """Decoder-only Transformer over [visual prefix ‖ prompt ‖ BOS + shifted target].

    Base weights live under `lm.`; P-tuning prompts under `soft_prompts.` so the
    two can be frozen independently.
    """

    def __init__(self, config: LMConfig, params: ParameterSet, rng: np.random.Generator):
        if config.vocab_size < 1:
            raise DimensionError("the language model needs vocab_size >= 1; build it from a vocabulary")
        self.config = config
        self.params = params
        d = config.d_model
        params.normal(f"{PREFIX}.token_embed", (config.vocab_size, d), rng)
        params.normal(f"{PREFIX}.pos_embed", (config.max_positions, d), rng)
        for i in range(config.depth):
            name = f"{PREFIX}.layers.{i}"
            layers.init_layer_norm(params, f"{name}.ln1", d)
            layers.init_attention(params, f"{name}.attn", d, rng)
            layers.init_layer_norm(params, f"{name}.ln2", d)
            layers.init_mlp(params, f"{name}.mlp", d, config.mlp_ratio, rng)
            if config.soft_prompt_len:
                params.normal(f"{SOFT_PREFIX}.{i}.key", (config.soft_prompt_len, d), rng)
                params.normal(f"{SOFT_PREFIX}.{i}.value", (config.soft_prompt_len, d), rng)
        layers.init_layer_norm(params, f"{PREFIX}.ln_final", d)
        layers.init_linear(params, f"{PREFIX}.head", d, config.vocab_size, rng)

    def soft_prompts(self, layer: int) -> Optional[SoftPromptLayer]:
        if not self.config.soft_prompt_len:
            return None
        return SoftPromptLayer(self.params[f"{SOFT_PREFIX}.{layer}.key"], self.params[f"{SOFT_PREFIX}.{layer}.value"])

    def mask(self, length: int, context_len: int) -> np.ndarray:
        prefix = context_len if self.config.attention_mask == "prefix" else 0
        return layers.causal_mask(length, bidirectional_prefix=prefix)

    def forward_lm(self, visual_prefix: Optional[Tensor], prompt_ids: Sequence[int], target_ids) -> Tensor:
        """Next-token logits at the target positions.

        `target_ids` is (B, T) or (T,); `visual_prefix` is (B, K, d), (K, d) or None.
        The output drops the batch axis when the target had none.
        """
        targets = np.asarray(target_ids, dtype=np.int64)
        single = targets.ndim == 1
        if single:
            targets = targets[None]
            if visual_prefix is not None and visual_prefix.ndim == 2:
                visual_prefix = ops.reshape(visual_prefix, (1,) + visual_prefix.shape)
        batch, target_len = targets.shape
        if target_len < 1:
            raise LengthError("target sequence is empty")
        prompt = np.broadcast_to(np.asarray(prompt_ids, dtype=np.int64), (batch, len(prompt_ids)))
        prefix_len = 0 if visual_prefix is None else visual_prefix.shape[1]
        total = prefix_len + prompt.shape[1] + target_len
        if total > self.config.max_positions:
            raise LengthError(
                f"sequence of {total} positions (prefix {prefix_len} + prompt {prompt.shape[1]} + "
                f"target {target_len}) exceeds max_positions={self.config.max_positions}"
            )
        shifted = np.concatenate([np.full((batch, 1), BOS_ID, dtype=np.int64), targets[:, :-1]], axis=1)
        table = self.params[f"{PREFIX}.token_embed"]
        segments = [] if visual_prefix is None else [visual_prefix]
        if prompt.shape[1]:
            segments.append(ops.embedding_lookup(table, prompt))
        segments.append(ops.embedding_lookup(table, shifted))
        hidden = ops.concat(segments, axis=1) if len(segments) > 1 else segments[0]
        hidden = ops.add(hidden, ops.slice_axis(self.params[f"{PREFIX}.pos_embed"], 0, total, axis=0))
        blocked = self.mask(total, prefix_len + prompt.shape[1])
        for i in range(self.config.depth):
            name = f"{PREFIX}.layers.{i}"
            hidden = ops.add(hidden, self_attention_ptuned(
                layers.layer_norm(self.params, f"{name}.ln1", hidden), self.params, f"{name}.attn",
                self.config.heads, self.soft_prompts(i), blocked,
            ))
            hidden = ops.add(hidden, layers.mlp(
                self.params, f"{name}.mlp", layers.layer_norm(self.params, f"{name}.ln2", hidden)
            ))
        hidden = ops.slice_axis(hidden, total - target_len, total, axis=1)
        logits = layers.linear(self.params, f"{PREFIX}.head", layers.layer_norm(self.params, f"{PREFIX}.ln_final", hidden))
        return ops.reshape(logits, logits.shape[1:]) if single else logits

    def base_parameter_count(self) -> int:
        return self.params.count(f"{PREFIX}.")

    def soft_prompt_count(self) -> int:
        return self.params.count(f"{SOFT_PREFIX}.")
