from objects.autograd.tensor import MASK_VALUE, Tape, Tensor, backward, grad_enabled, no_grad
from objects.autograd import ops

__all__ = ["MASK_VALUE", "Tape", "Tensor", "backward", "grad_enabled", "no_grad", "ops"]
