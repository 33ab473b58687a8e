from typing import Dict, Iterator, List, Mapping, Sequence, Tuple

import numpy as np

from objects.autograd.tensor import Tensor
from objects.errors import DimensionError

INIT_STD = 0.02


class ParameterSet:
    """Ordered name -> Tensor store shared by every component of a model.

    Names are dotted paths whose first segment is the component
    (`vision`, `qformer`, `lm`, `soft_prompts`).
    """

    def __init__(self, dtype: str = "float32"):
        self.dtype = np.dtype(dtype)
        self._tensors: Dict[str, Tensor] = {}

    def _register(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise KeyError(f"parameter '{name}' already exists")
        tensor = Tensor(data.astype(self.dtype), trainable=True, name=name)
        self._tensors[name] = tensor
        return tensor

    def normal(self, name: str, shape: Sequence[int], rng: np.random.Generator, std: float = INIT_STD) -> Tensor:
        return self._register(name, rng.normal(0.0, std, size=tuple(shape)))

    def zeros(self, name: str, shape: Sequence[int]) -> Tensor:
        return self._register(name, np.zeros(tuple(shape)))

    def ones(self, name: str, shape: Sequence[int]) -> Tensor:
        return self._register(name, np.ones(tuple(shape)))

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self, prefix: str = "") -> List[Tuple[str, Tensor]]:
        return [(name, t) for name, t in self._tensors.items() if name.startswith(prefix)]

    def trainable_items(self) -> List[Tuple[str, Tensor]]:
        return [(name, t) for name, t in self._tensors.items() if t.trainable]

    def set_trainable(self, prefix: str, flag: bool) -> None:
        for _, tensor in self.items(prefix):
            tensor.trainable = flag
            tensor.requires_grad = flag

    def count(self, prefix: str = "", trainable_only: bool = False) -> int:
        return sum(t.size for _, t in self.items(prefix) if t.trainable or not trainable_only)

    def zero_grad(self) -> None:
        for tensor in self._tensors.values():
            tensor.zero_grad()

    def snapshot(self, prefix: str = "") -> Dict[str, bytes]:
        """Raw bytes of every parameter under `prefix` (freeze ledgers compare these)."""
        return {name: t.data.tobytes() for name, t in self.items(prefix)}

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self._tensors.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> None:
        missing = [name for name in self._tensors if name not in state]
        unexpected = [name for name in state if name not in self._tensors]
        if strict and (missing or unexpected):
            raise KeyError(f"state mismatch: missing {missing[:5]}, unexpected {unexpected[:5]}")
        for name, array in state.items():
            if name not in self._tensors:
                continue
            tensor = self._tensors[name]
            if tuple(array.shape) != tensor.shape:
                raise DimensionError(f"parameter '{name}': stored shape {array.shape} vs model shape {tensor.shape}")
            tensor.data = np.array(array, dtype=self.dtype)
