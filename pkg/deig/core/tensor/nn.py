"""Parameter containers and the small layer set shared by the IDE, DFM and backbone."""

from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from deig.core.commons.errors import CheckpointError, ContractViolation, ShapeMismatchError
from deig.core.tensor import ops
from deig.core.tensor.tensor import Parameter, Tensor


class Module:
    """
    Base class for anything that owns Parameters.

    Parameters and sub-modules assigned as attributes are registered in
    assignment order, which fixes the dotted names returned by
    :meth:`named_parameters` (e.g. ``layers.3.cross_attn.w_q``).
    """

    def __init__(self):
        object.__setattr__(self, "_parameters", {})
        object.__setattr__(self, "_modules", {})

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Parameter]]:
        """
        Stable dotted names for every Parameter reachable from this module.

        Raises:
            ContractViolation: If a Parameter is reachable under two names
        """
        named: List[Tuple[str, Parameter]] = []
        seen: Dict[int, str] = {}
        for name, param in self._iter_named(prefix):
            if id(param) in seen:
                raise ContractViolation(
                    f"Parameter registered twice: {seen[id(param)]} and {name}"
                )
            seen[id(param)] = name
            named.append((name, param))
        return named

    def _iter_named(self, prefix: str) -> Iterator[Tuple[str, Parameter]]:
        for name, param in self._parameters.items():
            yield f"{prefix}{name}", param
        for name, module in self._modules.items():
            yield from module._iter_named(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def assign_names(self, prefix: str = "") -> None:
        """Stamp each Parameter with its dotted path."""
        for name, param in self.named_parameters(prefix):
            param.name = name

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def set_trainable(self, trainable: bool) -> None:
        for param in self.parameters():
            param.requires_grad = trainable
            if not trainable:
                param.zero_grad()

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self.named_parameters(prefix)}

    def load_state_dict(self, state: Dict[str, np.ndarray], prefix: str = "") -> None:
        """
        Copy arrays into the matching Parameters.

        Raises:
            CheckpointError: If a name is missing or a shape differs
        """
        for name, param in self.named_parameters(prefix):
            if name not in state:
                raise CheckpointError(f"Checkpoint is missing parameter {name}")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise CheckpointError(
                    f"Parameter {name}: checkpoint shape {value.shape} != model shape {param.shape}"
                )
            param.data = value.copy()


class ModuleList(Module):
    def __init__(self, modules: Sequence[Module] = ()):
        super().__init__()
        for module in modules:
            self.append(module)

    def append(self, module: Module) -> None:
        setattr(self, str(len(self._modules)), module)

    def __getitem__(self, index: int) -> Module:
        return list(self._modules.values())[index]

    def __iter__(self):
        return iter(self._modules.values())

    def __len__(self) -> int:
        return len(self._modules)


def normal_init(rng: np.random.Generator, shape: Sequence[int], std: float) -> np.ndarray:
    return rng.normal(0.0, std, size=tuple(shape))


class Linear(Module):
    """y = x W + b with W of shape (in, out)."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        bias: bool = True,
        zero_init: bool = False,
        std: Optional[float] = None,
    ):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        if zero_init:
            weight = np.zeros((in_features, out_features))
        else:
            weight = normal_init(rng, (in_features, out_features), std or 1.0 / np.sqrt(in_features))
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeMismatchError("linear", x.shape, self.weight.shape)
        out = ops.matmul(x, self.weight)
        if self.bias is not None:
            out = ops.add(out, self.bias)
        return out


_ACTIVATIONS = {"silu": ops.silu, "gelu": ops.gelu, "tanh": ops.tanh}


class MLP(Module):
    """Two-layer perceptron with a smooth nonlinearity."""

    def __init__(
        self,
        in_features: int,
        hidden: int,
        out_features: int,
        rng: np.random.Generator,
        activation: str = "silu",
        zero_init_out: bool = False,
    ):
        super().__init__()
        if activation not in _ACTIVATIONS:
            raise ContractViolation(f"Unknown activation {activation}")
        self.activation = activation
        self.fc1 = Linear(in_features, hidden, rng)
        self.fc2 = Linear(hidden, out_features, rng, zero_init=zero_init_out)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(_ACTIVATIONS[self.activation](self.fc1(x)))


def split_heads(x: Tensor, heads: int) -> Tensor:
    """(..., L, D) -> (..., H, L, D/H)"""
    *lead, length, dim = x.shape
    x = ops.reshape(x, (*lead, length, heads, dim // heads))
    n = len(lead)
    return ops.transpose(x, (*range(n), n + 1, n, n + 2))


def merge_heads(x: Tensor) -> Tensor:
    """(..., H, L, d) -> (..., L, H·d)"""
    *lead, heads, length, dim = x.shape
    n = len(lead)
    x = ops.transpose(x, (*range(n), n + 1, n, n + 2))
    return ops.reshape(x, (*lead, length, heads * dim))


class MultiHeadAttention(Module):
    """
    Multi-head scaled dot-product attention.

    Queries come from ``x``; keys and values from ``context`` (self-attention when
    omitted). The additive mask, when given, must broadcast over heads.
    """

    def __init__(
        self,
        dim: int,
        heads: int,
        rng: np.random.Generator,
        context_dim: Optional[int] = None,
        zero_init_out: bool = False,
    ):
        super().__init__()
        if dim % heads:
            raise ContractViolation(f"attention width {dim} is not divisible by {heads} heads")
        context_dim = context_dim or dim
        self.heads = heads
        self.w_q = Linear(dim, dim, rng, bias=False)
        self.w_k = Linear(context_dim, dim, rng, bias=False)
        self.w_v = Linear(context_dim, dim, rng, bias=False)
        self.w_o = Linear(dim, dim, rng, zero_init=zero_init_out)
        self.capture = False
        self.last_weights: Optional[np.ndarray] = None

    def forward(
        self,
        x: Tensor,
        context: Optional[Tensor] = None,
        mask: Optional[Union[Tensor, np.ndarray]] = None,
    ) -> Tensor:
        context = x if context is None else context
        q = split_heads(self.w_q(x), self.heads)
        k = split_heads(self.w_k(context), self.heads)
        v = split_heads(self.w_v(context), self.heads)
        out, weights = ops.scaled_dot_product_attention(q, k, v, mask)
        if self.capture:
            self.last_weights = weights.data.copy()
        return self.w_o(merge_heads(out))
