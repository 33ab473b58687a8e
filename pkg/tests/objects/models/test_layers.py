import numpy as np
import pytest

from objects.autograd import ops
from objects.autograd.tensor import Tensor
from objects.errors import DimensionError
from objects.models import layers
from objects.models.layers import SoftPromptLayer
from objects.models.parameters import ParameterSet


def build_attention(d=8, seed=0):
    params = ParameterSet("float64")
    rng = np.random.default_rng(seed)
    layers.init_attention(params, "attn", d, rng)
    # larger weights so attention is far from uniform
    for name, tensor in params.items("attn."):
        if name.endswith(".weight"):
            tensor.data = rng.normal(scale=0.5, size=tensor.shape)
    return params, rng


def test_causal_mask():
    blocked = layers.causal_mask(3)
    np.testing.assert_array_equal(blocked, [[False, True, True], [False, False, True], [False, False, False]])


def test_prefix_mask_opens_the_prefix_block():
    blocked = layers.causal_mask(4, bidirectional_prefix=2)
    assert not blocked[0, 1]
    assert blocked[1, 2] and blocked[2, 3]


def test_empty_soft_prompt_is_plain_attention():
    params, rng = build_attention()
    hidden = Tensor(rng.normal(size=(2, 5, 8)))
    blocked = layers.causal_mask(5)
    empty = SoftPromptLayer(Tensor(np.zeros((0, 8))), Tensor(np.zeros((0, 8))))
    plain = layers.attention(params, "attn", hidden, heads=2, blocked=blocked).data
    tuned = layers.attention(params, "attn", hidden, heads=2, blocked=blocked, soft=empty).data
    assert plain.tobytes() == tuned.tobytes()


def test_zero_prompt_values_scale_by_real_attention_mass():
    params, rng = build_attention(d=6, seed=1)
    hidden_np = rng.normal(size=(1, 4, 6))
    prompt_keys = rng.normal(size=(3, 6))
    soft = SoftPromptLayer(Tensor(prompt_keys), Tensor(np.zeros((3, 6))))
    blocked = layers.causal_mask(4)
    hidden = Tensor(hidden_np)

    # one head, zero output bias: the output projection commutes with per-query scaling
    out_w = params["attn.out.weight"].data
    plain_context = layers.attention(params, "attn", hidden, heads=1, blocked=blocked).data @ np.linalg.pinv(out_w)
    tuned_context = layers.attention(params, "attn", hidden, heads=1, blocked=blocked, soft=soft).data @ np.linalg.pinv(out_w)

    q = hidden_np[0] @ params["attn.q.weight"].data
    k = hidden_np[0] @ params["attn.k.weight"].data
    scale = 1.0 / np.sqrt(6)
    real = np.where(blocked, 0.0, np.exp(q @ k.T * scale)).sum(axis=1)
    prompt = np.exp(q @ prompt_keys.T * scale).sum(axis=1)
    mass = real / (real + prompt)
    np.testing.assert_allclose(tuned_context[0], plain_context[0] * mass[:, None], rtol=1e-6, atol=1e-8)


def test_soft_prompt_attention_rows_sum_to_one():
    params, rng = build_attention()
    hidden = Tensor(rng.normal(size=(1, 3, 8)))
    soft = SoftPromptLayer(Tensor(rng.normal(size=(4, 8))), Tensor(rng.normal(size=(4, 8))))
    q = layers.split_heads(layers.linear(params, "attn.q", hidden), 2)
    k = layers.split_heads(layers.linear(params, "attn.k", hidden), 2)
    keys = ops.concat([layers._prompt_heads(soft.key, 1, 2), k], axis=2)
    blocked = np.concatenate([np.zeros((3, 4), dtype=bool), layers.causal_mask(3)], axis=1)
    weights = layers.attention_weights(q, keys, blocked).data
    np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(weights[..., :4] > 0)


def test_attention_mask_shape_mismatch():
    params, rng = build_attention()
    hidden = Tensor(rng.normal(size=(1, 3, 8)))
    with pytest.raises(DimensionError):
        layers.attention(params, "attn", hidden, heads=2, blocked=layers.causal_mask(4))
