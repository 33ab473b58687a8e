import contextlib
import contextvars
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from objects.errors import DimensionError, TapeError

# Masked attention / logit entries use a large finite negative instead of -inf.
MASK_VALUE = -1e9

_GRAD_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar("medcap_grad_enabled", default=True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Run ops without recording a tape (inference)."""
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


class Tensor:
    """Dense row-major array with a gradient slot.

    `trainable` marks parameters the optimizer may update. `requires_grad` marks
    tensors that sit on the gradient path; it defaults to `trainable` for leaves
    and is inherited by op outputs.
    """

    def __init__(
        self,
        data,
        trainable: bool = False,
        requires_grad: Optional[bool] = None,
        name: Optional[str] = None,
        _parents: Tuple["Tensor", ...] = (),
        _op: str = "",
    ):
        array = np.asarray(data)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float32)
        self.data: np.ndarray = array
        self.trainable = trainable
        self.requires_grad = trainable if requires_grad is None else requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents = _parents
        self._op = _op
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, gradient: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if gradient.shape != self.data.shape:
            raise DimensionError(f"gradient shape {gradient.shape} does not match tensor shape {self.data.shape}")
        gradient = gradient.astype(self.data.dtype, copy=False)
        self.grad = gradient.copy() if self.grad is None else self.grad + gradient

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, trainable={self.trainable}{label})"

    # Operator sugar; the functions in objects.autograd.ops do the work.
    def __add__(self, other: "Tensor") -> "Tensor":
        from objects.autograd import ops
        return ops.add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        from objects.autograd import ops
        return ops.multiply(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from objects.autograd import ops
        return ops.matmul(self, other)


def make_result(
    data: np.ndarray,
    parents: Sequence[Tensor],
    op: str,
    backward_fn: Callable[[np.ndarray], None],
) -> Tensor:
    """Wrap an op output and record its local gradient rule if it is on the gradient path."""
    requires = grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires, _parents=tuple(parents) if requires else (), _op=op)
    if requires:
        out._backward = backward_fn
    return out


@dataclass(frozen=True)
class TapeNode:
    output: Tensor
    inputs: Tuple[Tensor, ...]
    op: str


class Tape:
    """Operation nodes reachable from a loss, in topological order (inputs first)."""

    def __init__(self, nodes: List[TapeNode]):
        self.nodes = nodes

    @classmethod
    def record(cls, root: Tensor) -> "Tape":
        order: List[TapeNode] = []
        visited = set()
        # Iterative post-order DFS; deep decoder graphs exceed the recursion limit.
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(TapeNode(tensor, tensor._parents, tensor._op))
                continue
            if id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            for parent in reversed(tensor._parents):
                if id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)

    def run_backward(self, root: Tensor) -> None:
        root.grad = np.ones_like(root.data)
        for node in reversed(self.nodes):
            tensor = node.output
            if tensor._backward is None or tensor.grad is None:
                continue
            tensor._backward(tensor.grad)


def backward(loss: Tensor) -> Tape:
    """Populate `.grad` on every tensor on the path from `loss`.

    Returns the tape that was traversed.
    """
    if loss.size != 1:
        raise DimensionError(f"backward expects a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise TapeError("backward called on a tensor that is not connected to any gradient path")
    tape = Tape.record(loss)
    tape.run_backward(loss)
    return tape
