from deig.core.tensor import ops
from deig.core.tensor.tensor import (
    Parameter,
    Tensor,
    as_tensor,
    backward,
    corrupt_gradient,
    is_grad_enabled,
    no_grad,
)

__all__ = [
    "Parameter",
    "Tensor",
    "as_tensor",
    "backward",
    "corrupt_gradient",
    "is_grad_enabled",
    "no_grad",
    "ops",
]
