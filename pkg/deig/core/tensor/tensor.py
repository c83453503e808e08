"""Dense float64 tensor with a dynamic reverse-mode gradient tape."""

from __future__ import annotations

import contextlib
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from deig.core.commons.errors import ContractViolation

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_GRAD_ENABLED = True
# op name -> multiplicative factor applied to that op's backward (gradcheck negative control)
_GRAD_CORRUPTIONS: Dict[str, float] = {}


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable taping inside the block."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


@contextlib.contextmanager
def corrupt_gradient(op: str, factor: float = 1.01) -> Iterator[None]:
    """Scale the backward pass of one op by ``factor`` inside the block."""
    _GRAD_CORRUPTIONS[op] = factor
    try:
        yield
    finally:
        _GRAD_CORRUPTIONS.pop(op, None)


class Tensor:
    """
    Dense n-dimensional float64 array that can take part in the gradient tape.

    Non-leaf tensors keep references to their parents and a closure mapping the
    upstream gradient to one gradient per parent. The tape is rebuilt on every
    forward pass.
    """

    __array_priority__ = 1000

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        array = np.array(data, dtype=np.float64)
        self.data: np.ndarray = array
        self.requires_grad: bool = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.op: Optional[str] = None
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None

    # --- construction helpers ---
    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        """Wrap an op result, recording it on the tape when a parent needs gradients."""
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.grad = None
        out.name = None
        out.op = op
        track = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        out.requires_grad = track
        out._parents = tuple(parents) if track else ()
        out._backward = backward if track else None
        return out

    # --- convenience ---
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        """
        Raises:
            ContractViolation: If the tensor holds more than one element
        """
        if self.data.size != 1:
            raise ContractViolation(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        req = ", requires_grad=True" if self.requires_grad else ""
        nm = f", name={self.name}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{req}{nm})"

    # --- operators (implemented in ops) ---
    def __add__(self, other):
        from deig.core.tensor import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from deig.core.tensor import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from deig.core.tensor import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from deig.core.tensor import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from deig.core.tensor import ops

        return ops.div(self, other)

    def __neg__(self):
        from deig.core.tensor import ops

        return ops.neg(self)

    def __matmul__(self, other):
        from deig.core.tensor import ops

        return ops.matmul(self, other)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from deig.core.tensor import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        from deig.core.tensor import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        from deig.core.tensor import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, axes: Optional[Sequence[int]] = None) -> "Tensor":
        from deig.core.tensor import ops

        return ops.transpose(self, axes)

    # --- autograd core ---
    def backward(self) -> Dict["Tensor", np.ndarray]:
        return backward(self)


class Parameter(Tensor):
    """A named leaf tensor owned by a model."""

    def __init__(
        self,
        data: ArrayLike,
        name: Optional[str] = None,
        requires_grad: bool = True,
    ):
        super().__init__(data, requires_grad=requires_grad, name=name)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name}, shape={self.data.shape}, requires_grad={self.requires_grad})"


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    """Wrap constants as non-differentiable tensors."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """
    Propagate d(loss)/d(leaf) through the tape.

    Args:
        loss: Scalar-shaped tensor produced by taped operations

    Returns:
        Mapping from every reached leaf tensor requiring gradients to the
        gradient contributed by this call. Each leaf's ``grad`` is accumulated
        in place, so repeated calls without ``zero_grad`` add up.

    Raises:
        ContractViolation: If ``loss`` is not scalar-shaped
    """
    if loss.data.size != 1:
        raise ContractViolation(
            f"backward requires a scalar loss, got shape {tuple(loss.shape)}"
        )
    if not loss.requires_grad:
        return {}

    order = _topological_order(loss)
    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: Dict[Tensor, np.ndarray] = {}

    for node in reversed(order):
        upstream = grads.pop(id(node), None)
        if upstream is None:
            continue
        if node._backward is None:
            node.grad = upstream.copy() if node.grad is None else node.grad + upstream
            leaves[node] = upstream
            continue
        parent_grads = node._backward(upstream)
        factor = _GRAD_CORRUPTIONS.get(node.op or "")
        for parent, grad in zip(node._parents, parent_grads):
            if grad is None or not parent.requires_grad:
                continue
            if factor is not None:
                grad = grad * factor
            key = id(parent)
            grads[key] = grad if key not in grads else grads[key] + grad

    return leaves
