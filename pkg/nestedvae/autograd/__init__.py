from .tensor import Tensor, Function, Graph, no_grad, is_grad_enabled, as_tensor, backward
from .gradcheck import grad_check
from . import functional

__all__ = [
    "Tensor",
    "Function",
    "Graph",
    "no_grad",
    "is_grad_enabled",
    "as_tensor",
    "backward",
    "grad_check",
    "functional",
]
