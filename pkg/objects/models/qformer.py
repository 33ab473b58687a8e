import warnings

import numpy as np

from objects.autograd import ops
from objects.autograd.tensor import Tensor
from objects.errors import ConfigError, ConfigurationWarning
from objects.models import layers
from objects.models.config import QFormerConfig
from objects.models.parameters import ParameterSet

PREFIX = "qformer"


def count_cross_attn_layers(cfg: QFormerConfig) -> int:
    count = cfg.depth // cfg.cross_attn_period
    if count == 0:
        warnings.warn(
            f"qformer depth={cfg.depth} with cross_attn_period={cfg.cross_attn_period} "
            "has no cross-attention layer; the bridge never sees the image",
            ConfigurationWarning,
            stacklevel=2,
        )
    return count


def has_cross_attention(block: int, cfg: QFormerConfig) -> bool:
    """`block` is 1-based: cross-attention sits in blocks period, 2·period, ..."""
    return block % cfg.cross_attn_period == 0


class QFormer:
    """K learnable queries that read the image features and land in the LM's embedding space."""

    def __init__(self, config: QFormerConfig, d_v: int, num_image_tokens: int, params: ParameterSet, rng: np.random.Generator):
        if num_image_tokens <= config.num_queries:
            raise ConfigError(
                f"the bridge needs more image tokens than queries: N={num_image_tokens}, K={config.num_queries}"
            )
        self.config = config
        self.params = params
        self.num_cross_layers = count_cross_attn_layers(config)
        params.normal(f"{PREFIX}.query_tokens", (config.num_queries, config.d_q), rng)
        for block in range(1, config.depth + 1):
            name = f"{PREFIX}.blocks.{block}"
            layers.init_layer_norm(params, f"{name}.ln_self", config.d_q)
            layers.init_attention(params, f"{name}.self_attn", config.d_q, rng)
            if has_cross_attention(block, config):
                layers.init_layer_norm(params, f"{name}.ln_cross", config.d_q)
                layers.init_layer_norm(params, f"{name}.ln_memory", d_v)
                layers.init_attention(params, f"{name}.cross_attn", config.d_q, rng, d_memory=d_v, zero_output=True)
            layers.init_layer_norm(params, f"{name}.ln_mlp", config.d_q)
            layers.init_mlp(params, f"{name}.mlp", config.d_q, config.mlp_ratio, rng)
        layers.init_layer_norm(params, f"{PREFIX}.ln_out", config.d_q)
        layers.init_linear(params, f"{PREFIX}.proj", config.d_q, config.d_lm, rng)

    def bridge(self, image_feats: Tensor) -> Tensor:
        """(B, N, d_v) image features -> (B, K, d_lm) visual prefix."""
        batch, num_tokens, _ = image_feats.shape
        if num_tokens <= self.config.num_queries:
            raise ConfigError(f"N={num_tokens} image tokens must exceed K={self.config.num_queries} queries")
        params, heads = self.params, self.config.heads
        queries = ops.broadcast_leading(params[f"{PREFIX}.query_tokens"], (batch,))
        for block in range(1, self.config.depth + 1):
            name = f"{PREFIX}.blocks.{block}"
            queries = ops.add(queries, layers.attention(
                params, f"{name}.self_attn", layers.layer_norm(params, f"{name}.ln_self", queries), heads
            ))
            if has_cross_attention(block, self.config):
                memory = layers.layer_norm(params, f"{name}.ln_memory", image_feats)
                queries = ops.add(queries, layers.attention(
                    params, f"{name}.cross_attn", layers.layer_norm(params, f"{name}.ln_cross", queries), heads,
                    memory=memory,
                ))
            queries = ops.add(queries, layers.mlp(
                params, f"{name}.mlp", layers.layer_norm(params, f"{name}.ln_mlp", queries)
            ))
        return layers.linear(params, f"{PREFIX}.proj", layers.layer_norm(params, f"{PREFIX}.ln_out", queries))

    def parameter_count(self) -> int:
        return self.params.count(f"{PREFIX}.")
