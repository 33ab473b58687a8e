from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from objects.autograd.tensor import Tensor
from objects.errors import NumericError
from objects.models.parameters import ParameterSet

BETAS: Tuple[float, float] = (0.9, 0.999)
EPS = 1e-8
NO_DECAY_SUFFIXES = (".bias", ".gain")


@dataclass
class AdamWState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def to_records(self) -> Dict[str, np.ndarray]:
        records = {f"adam.m.{name}": value for name, value in self.m.items()}
        records.update({f"adam.v.{name}": value for name, value in self.v.items()})
        records["adam.step"] = np.array([self.step], dtype=np.float32)
        return records

    @classmethod
    def from_records(cls, records: Mapping[str, np.ndarray]) -> "AdamWState":
        state = cls(step=int(records["adam.step"][0]) if "adam.step" in records else 0)
        for name, value in records.items():
            if name.startswith("adam.m."):
                state.m[name[len("adam.m."):]] = np.array(value)
            elif name.startswith("adam.v."):
                state.v[name[len("adam.v."):]] = np.array(value)
        return state


def decays(name: str) -> bool:
    return not name.endswith(NO_DECAY_SUFFIXES)


def clip_gradients(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Scale `grads` in place to global L2 norm <= max_norm; returns the norm before clipping."""
    norm = float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / (norm + 1e-12)
        for name in grads:
            grads[name] = grads[name] * factor
    return norm


def adamw_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: AdamWState,
    lr: float,
    weight_decay: float,
    betas: Tuple[float, float] = BETAS,
    eps: float = EPS,
) -> None:
    """One decoupled-weight-decay Adam update of every trainable tensor that has a gradient."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for '{name}' at optimizer step {state.step + 1}")
    state.step += 1
    beta1, beta2 = betas
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, g in grads.items():
        tensor = params[name]
        if not tensor.trainable:
            continue
        weights = tensor.data
        if weight_decay and decays(name):
            weights = weights - lr * weight_decay * weights
        m = beta1 * state.m.get(name, np.zeros_like(g)) + (1.0 - beta1) * g
        v = beta2 * state.v.get(name, np.zeros_like(g)) + (1.0 - beta2) * g * g
        state.m[name], state.v[name] = m, v
        update = (m / correction1) / (np.sqrt(v / correction2) + eps)
        tensor.data = (weights - lr * update).astype(tensor.dtype)


class AdamW:
    """Optimizer over a ParameterSet, skipping frozen tensors."""

    def __init__(self, params: ParameterSet, weight_decay: float, grad_clip: float = 0.0,
                 state: AdamWState = None):
        self.params = params
        self.weight_decay = weight_decay
        self.grad_clip = grad_clip
        self.state = state or AdamWState()

    def gradients(self) -> Dict[str, np.ndarray]:
        return {name: t.grad for name, t in self.params.trainable_items() if t.grad is not None}

    def step(self, lr: float) -> float:
        """Apply one update from the current `.grad` slots; returns the pre-clip gradient norm."""
        grads = self.gradients()
        norm = clip_gradients(grads, self.grad_clip)
        adamw_step(dict(self.params.items()), grads, self.state, lr, self.weight_decay)
        return norm
