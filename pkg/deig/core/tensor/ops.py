"""Differentiable operations over :class:`Tensor`.

Every op returns a new tensor; the backward closure maps the upstream gradient to
one gradient per parent (``None`` for constants).
"""

import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from deig.config.constants import NEG_INF
from deig.core.commons.errors import ContractViolation, ShapeMismatchError
from deig.core.tensor.tensor import Tensor, as_tensor

Operand = Union[Tensor, np.ndarray, float, int]

_GELU_K = math.sqrt(2.0 / math.pi)
_GELU_C = 0.044715


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(op, a.shape, b.shape)


# --- elementwise ---
def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def _backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), _backward, "add")


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def _backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), _backward, "sub")


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def _backward(g):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), _backward, "mul")


def div(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("div", a, b)
    if np.any(b.data == 0):
        raise ContractViolation("div: division by zero")

    def _backward(g):
        return (
            unbroadcast(g / b.data, a.shape),
            unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return Tensor.from_op(a.data / b.data, (a, b), _backward, "div")


def neg(x: Operand) -> Tensor:
    x = as_tensor(x)
    return Tensor.from_op(-x.data, (x,), lambda g: (-g,), "neg")


def square(x: Operand) -> Tensor:
    x = as_tensor(x)
    return Tensor.from_op(x.data * x.data, (x,), lambda g: (2.0 * x.data * g,), "square")


def tanh(x: Operand) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return Tensor.from_op(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def silu(x: Operand) -> Tensor:
    x = as_tensor(x)
    s = _sigmoid(x.data)

    def _backward(g):
        return (g * (s + x.data * s * (1.0 - s)),)

    return Tensor.from_op(x.data * s, (x,), _backward, "silu")


def gelu(x: Operand) -> Tensor:
    """GELU, tanh approximation."""
    x = as_tensor(x)
    z = x.data
    inner = _GELU_K * (z + _GELU_C * z**3)
    th = np.tanh(inner)

    def _backward(g):
        d_inner = _GELU_K * (1.0 + 3.0 * _GELU_C * z * z)
        return (g * (0.5 * (1.0 + th) + 0.5 * z * (1.0 - th * th) * d_inner),)

    return Tensor.from_op(0.5 * z * (1.0 + th), (x,), _backward, "gelu")


# --- linear algebra ---
def matmul(a: Operand, b: Operand) -> Tensor:
    """
    Batched matrix product with broadcasting over leading axes.

    Raises:
        ShapeMismatchError: If inner extents differ or leading extents do not broadcast
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeMismatchError("matmul", a.shape, b.shape, detail="leading extents")

    def _backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return Tensor.from_op(a.data @ b.data, (a, b), _backward, "matmul")


# --- normalisation ---
def _blocked_entries(mask: np.ndarray) -> np.ndarray:
    blocked = mask <= NEG_INF
    if not np.all(blocked | (mask == 0.0)):
        raise ContractViolation("masked_softmax: mask entries must be 0 or -inf")
    return blocked


def masked_softmax(scores: Operand, mask: Optional[Union[Tensor, np.ndarray]] = None) -> Tensor:
    """
    Softmax over the last axis of ``scores + mask``.

    Masked entries come out as exact zeros and rows with every entry masked are
    all-zero rows with zero gradient.

    Args:
        scores: Tensor (..., R, K)
        mask: Additive mask with entries 0 or -inf (the -1e30 sentinel or a real
            -inf), broadcastable to ``scores`` and sharing its final two extents

    Raises:
        ShapeMismatchError: If the mask does not fit the scores
        ContractViolation: If a mask entry is neither 0 nor -inf
    """
    scores = as_tensor(scores)
    if mask is None:
        blocked = np.zeros(scores.shape, dtype=bool)
    else:
        m = mask.data if isinstance(mask, Tensor) else np.asarray(mask, dtype=np.float64)
        if m.ndim < 2 or m.shape[-2:] != scores.shape[-2:]:
            raise ShapeMismatchError("masked_softmax", scores.shape, m.shape)
        try:
            np.broadcast_shapes(scores.shape, m.shape)
        except ValueError:
            raise ShapeMismatchError("masked_softmax", scores.shape, m.shape)
        blocked = np.broadcast_to(_blocked_entries(m), scores.shape)

    z = np.where(blocked, scores.data + NEG_INF, scores.data)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.where(blocked, 0.0, np.exp(z))
    total = e.sum(axis=-1, keepdims=True)
    y = np.divide(e, total, out=np.zeros_like(e), where=total > 0)

    def _backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return Tensor.from_op(y, (scores,), _backward, "masked_softmax")


def softmax(scores: Operand) -> Tensor:
    return masked_softmax(scores, None)


def layer_norm(x: Operand, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean and unit variance (no affine)."""
    if eps <= 0:
        raise ContractViolation("layer_norm: eps must be positive")
    x = as_tensor(x)
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    y = centered * inv

    def _backward(g):
        mean_g = g.mean(axis=-1, keepdims=True)
        mean_gy = (g * y).mean(axis=-1, keepdims=True)
        return (inv * (g - mean_g - y * mean_gy),)

    return Tensor.from_op(y, (x,), _backward, "layer_norm")


# --- reductions ---
def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum(x: Operand, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def _backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor.from_op(out, (x,), _backward, "sum")


def mean(x: Operand, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    out = x.data.mean(axis=axes, keepdims=keepdims)

    def _backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return Tensor.from_op(out, (x,), _backward, "mean")


# --- shape manipulation ---
def reshape(x: Operand, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeMismatchError("reshape", x.shape, tuple(shape))
    return Tensor.from_op(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x: Operand, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; by default swap the two trailing axes."""
    x = as_tensor(x)
    if axes is None:
        if x.ndim < 2:
            raise ShapeMismatchError("transpose", x.shape, detail="needs at least 2 axes")
        axes = list(range(x.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
    axes = tuple(a % x.ndim for a in axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ContractViolation(f"transpose: {axes} is not a permutation of {x.ndim} axes")
    inverse = tuple(np.argsort(axes))
    return Tensor.from_op(
        np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),), "transpose"
    )


def expand(x: Operand, shape: Sequence[int]) -> Tensor:
    """Broadcast ``x`` to ``shape``."""
    x = as_tensor(x)
    shape = tuple(shape)
    try:
        out = np.broadcast_to(x.data, shape).copy()
    except ValueError:
        raise ShapeMismatchError("expand", x.shape, shape)
    return Tensor.from_op(out, (x,), lambda g: (unbroadcast(g, x.shape),), "expand")


def concat(tensors: Sequence[Operand], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractViolation("concat: needs at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeMismatchError("concat", *[t.shape for t in tensors], detail=f"axis {axis}")
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor.from_op(out, tensors, _backward, "concat")


def slice(x: Operand, start: int, stop: int, axis: int = 0) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    axis = axis % x.ndim
    extent = x.shape[axis]
    if not (0 <= start < stop <= extent):
        raise ContractViolation(f"slice: [{start}, {stop}) outside axis {axis} of extent {extent}")
    index = [np.s_[:]] * x.ndim
    index[axis] = np.s_[start:stop]
    index = tuple(index)

    def _backward(g):
        grad = np.zeros(x.shape)
        grad[index] = g
        return (grad,)

    return Tensor.from_op(x.data[index].copy(), (x,), _backward, "slice")


def take(x: Operand, indices: Sequence[int], axis: int = 0) -> Tensor:
    """Gather entries along ``axis``; repeated indices accumulate in backward."""
    x = as_tensor(x)
    axis = axis % x.ndim
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1 or (idx.size and (idx.min() < 0 or idx.max() >= x.shape[axis])):
        raise ContractViolation(f"take: indices out of range for axis {axis} of extent {x.shape[axis]}")

    def _backward(g):
        grad = np.zeros(x.shape)
        np.add.at(np.moveaxis(grad, axis, 0), idx, np.moveaxis(g, axis, 0))
        return (grad,)

    return Tensor.from_op(np.take(x.data, idx, axis=axis), (x,), _backward, "take")


# --- embeddings ---
def sinusoidal_embedding(t: Operand, dim: int, max_period: float = 10000.0) -> Tensor:
    """
    Sinusoidal embedding of (possibly fractional) timesteps.

    Args:
        t: Tensor of shape (B,)
        dim: Output width; an odd width gets a trailing zero column

    Returns:
        Tensor of shape (B, dim) laid out as [sin(t·f_k)..., cos(t·f_k)...]
    """
    t = as_tensor(t)
    if t.ndim != 1:
        raise ShapeMismatchError("sinusoidal_embedding", t.shape, detail="expects (B,)")
    half = dim // 2
    freqs = np.exp(-math.log(max_period) * np.arange(half) / max(half, 1))
    args = t.data[:, None] * freqs[None, :]
    parts = [np.sin(args), np.cos(args)]
    if dim % 2:
        parts.append(np.zeros((t.shape[0], 1)))
    out = np.concatenate(parts, axis=-1)

    def _backward(g):
        g_sin, g_cos = g[:, :half], g[:, half : 2 * half]
        return (((g_sin * np.cos(args) - g_cos * np.sin(args)) * freqs).sum(axis=-1),)

    return Tensor.from_op(out, (t,), _backward, "sinusoidal_embedding")


def fourier_features(x: Operand, n_freqs: int) -> Tensor:
    """
    Fourier features of coordinates.

    Output layout per coordinate c and frequency k (k = 0..n_freqs-1, frequency
    2π·2^k): [sin, cos], flattened as [c][k][sin, cos]. A (..., 4) box therefore
    maps to (..., 8·n_freqs).
    """
    x = as_tensor(x)
    freqs = 2.0 * math.pi * (2.0 ** np.arange(n_freqs))
    args = x.data[..., :, None] * freqs
    out = np.stack([np.sin(args), np.cos(args)], axis=-1).reshape(*x.shape[:-1], -1)

    def _backward(g):
        g = g.reshape(*args.shape, 2)
        d = g[..., 0] * np.cos(args) - g[..., 1] * np.sin(args)
        return ((d * freqs).sum(axis=-1),)

    return Tensor.from_op(out, (x,), _backward, "fourier_features")


# --- losses ---
def mse(prediction: Operand, target: Operand) -> Tensor:
    diff = sub(prediction, target)
    return mean(square(diff))


def scaled_dot_product_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    mask: Optional[Union[Tensor, np.ndarray]] = None,
) -> Tuple[Tensor, Tensor]:
    """
    softmax(Q Kᵀ / √d + M) V.

    Returns:
        (output, attention weights)
    """
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = mul(matmul(q, transpose(k)), scale)
    weights = masked_softmax(scores, mask)
    return matmul(weights, v), weights
