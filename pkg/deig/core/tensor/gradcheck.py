"""Central finite-difference checks for the op set and for whole modules."""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from deig.config.constants import FD_STEP, NEG_INF, OP_TOLERANCE, STACK_TOLERANCE
from deig.core.tensor import ops
from deig.core.tensor.tensor import Parameter, Tensor, backward, no_grad


@dataclass
class GradcheckResult:
    name: str
    max_rel_error: float
    tolerance: float
    checked: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_rel_error)) and self.max_rel_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """
    |a - n| / max(1, |a|, |n|), elementwise.

    Where both gradients are below 1 in magnitude this is the absolute error, so
    a tolerance of 1e-6 bounds |a - n| for small gradients rather than their ratio.
    """
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return np.abs(analytic - numeric) / scale


def numerical_gradient(
    loss_value: Callable[[], float],
    array: np.ndarray,
    indices: Optional[Sequence[Tuple[int, ...]]] = None,
    step: float = FD_STEP,
) -> np.ndarray:
    """
    Central differences of ``loss_value`` with respect to entries of ``array``.

    ``array`` is perturbed in place and restored. When ``indices`` is given only
    those entries are evaluated; the result then holds one value per index.
    """
    targets = list(indices) if indices is not None else list(np.ndindex(array.shape))
    grads = np.zeros(len(targets))
    for k, index in enumerate(targets):
        original = array[index]
        array[index] = original + step
        plus = loss_value()
        array[index] = original - step
        minus = loss_value()
        array[index] = original
        grads[k] = (plus - minus) / (2.0 * step)
    if indices is None:
        return grads.reshape(array.shape)
    return grads


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    # kept off the op table so a corrupted op cannot leak into every check
    return Tensor.from_op(
        np.sum(out.data * weights), (out,), lambda g: (g * weights,), "gradcheck_loss"
    )


def check_op(
    name: str,
    fn: Callable[..., Tensor],
    inputs: Sequence[np.ndarray],
    rng: np.random.Generator,
    tolerance: float = OP_TOLERANCE,
) -> GradcheckResult:
    """Compare the taped gradient of a random weighted sum of ``fn(*inputs)``."""
    tensors = [Tensor(array.copy(), requires_grad=True) for array in inputs]
    out = fn(*tensors)
    weights = rng.uniform(-1.0, 1.0, size=out.shape)
    backward(_weighted_sum(out, weights))

    def loss_value() -> float:
        with no_grad():
            return float(np.sum(fn(*tensors).data * weights))

    worst = 0.0
    checked = 0
    for tensor in tensors:
        numeric = numerical_gradient(loss_value, tensor.data)
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        worst = max(worst, float(relative_error(analytic, numeric).max(initial=0.0)))
        checked += tensor.size
    return GradcheckResult(name, worst, tolerance, checked)


def check_parameters(
    name: str,
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tuple[str, Parameter]],
    rng: np.random.Generator,
    samples_per_param: int = 4,
    tolerance: float = STACK_TOLERANCE,
) -> Tuple[GradcheckResult, Dict[str, float]]:
    """
    Finite-difference check of a scalar loss against sampled entries of every parameter.

    Returns:
        The aggregate result and the per-parameter maximum relative error
    """
    for _, param in params:
        param.zero_grad()
    backward(loss_fn())

    def loss_value() -> float:
        with no_grad():
            return float(loss_fn().data)

    per_param: Dict[str, float] = {}
    checked = 0
    for pname, param in params:
        flat = rng.choice(param.size, size=min(samples_per_param, param.size), replace=False)
        indices = [np.unravel_index(int(i), param.shape) for i in np.sort(flat)]
        numeric = numerical_gradient(loss_value, param.data, indices)
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        analytic = np.array([grad[index] for index in indices])
        per_param[pname] = float(relative_error(analytic, numeric).max(initial=0.0))
        checked += len(indices)
    worst = max(per_param.values(), default=0.0)
    return GradcheckResult(name, worst, tolerance, checked), per_param


def _uniform(rng: np.random.Generator, shape: Sequence[int]) -> np.ndarray:
    return rng.uniform(-2.0, 2.0, size=tuple(shape))


def _random_mask(rng: np.random.Generator, shape: Sequence[int]) -> np.ndarray:
    mask = np.where(rng.random(tuple(shape)) < 0.3, NEG_INF, 0.0)
    mask[..., 0, :] = NEG_INF  # one fully masked row
    return mask


OpCase = Tuple[Callable[..., Tensor], List[np.ndarray]]


def op_cases(rng: np.random.Generator) -> Dict[str, List[OpCase]]:
    """Three random-shape cases for every differentiable op."""
    u = lambda *shape: _uniform(rng, shape)  # noqa: E731
    pos = lambda *shape: np.abs(_uniform(rng, shape)) + 0.5  # noqa: E731
    masks = [_random_mask(rng, s) for s in [(3, 4), (2, 3, 5), (4, 4)]]
    return {
        "add": [(ops.add, [u(3, 4), u(3, 4)]), (ops.add, [u(2, 3, 4), u(4)]), (ops.add, [u(5, 1), u(1, 3)])],
        "sub": [(ops.sub, [u(3, 4), u(3, 4)]), (ops.sub, [u(2, 3), u(3)]), (ops.sub, [u(4, 1, 2), u(3, 1)])],
        "mul": [(ops.mul, [u(3, 4), u(3, 4)]), (ops.mul, [u(2, 3, 4), u(1, 4)]), (ops.mul, [u(6), u(6)])],
        "div": [(ops.div, [u(3, 4), pos(3, 4)]), (ops.div, [u(2, 5), pos(5)]), (ops.div, [u(4, 2), pos(4, 1)])],
        "neg": [(ops.neg, [u(3, 4)]), (ops.neg, [u(5)]), (ops.neg, [u(2, 2, 2)])],
        "square": [(ops.square, [u(3, 4)]), (ops.square, [u(5)]), (ops.square, [u(2, 3, 2)])],
        "matmul": [
            (ops.matmul, [u(3, 4), u(4, 2)]),
            (ops.matmul, [u(2, 3, 4), u(4, 5)]),
            (ops.matmul, [u(2, 1, 3, 2), u(3, 2, 4)]),
        ],
        "masked_softmax": [
            (lambda s, m=masks[0]: ops.masked_softmax(s, m), [u(3, 4)]),
            (lambda s, m=masks[1]: ops.masked_softmax(s, m), [u(2, 3, 5)]),
            (lambda s, m=masks[2]: ops.masked_softmax(s, m), [u(2, 4, 4)]),
        ],
        "layer_norm": [
            (ops.layer_norm, [u(4, 8)]),
            (ops.layer_norm, [u(2, 3, 5)]),
            (ops.layer_norm, [u(6)]),
        ],
        "silu": [(ops.silu, [u(3, 4)]), (ops.silu, [u(7)]), (ops.silu, [u(2, 2, 3)])],
        "gelu": [(ops.gelu, [u(3, 4)]), (ops.gelu, [u(7)]), (ops.gelu, [u(2, 2, 3)])],
        "tanh": [(ops.tanh, [u(3, 4)]), (ops.tanh, [u(7)]), (ops.tanh, [u(2, 2, 3)])],
        "concat": [
            (lambda a, b: ops.concat([a, b], axis=0), [u(2, 3), u(4, 3)]),
            (lambda a, b: ops.concat([a, b], axis=-1), [u(2, 3), u(2, 1)]),
            (lambda a, b, c: ops.concat([a, b, c], axis=1), [u(2, 1, 2), u(2, 3, 2), u(2, 2, 2)]),
        ],
        "slice": [
            (lambda x: ops.slice(x, 1, 3, axis=0), [u(4, 3)]),
            (lambda x: ops.slice(x, 0, 2, axis=-1), [u(2, 5)]),
            (lambda x: ops.slice(x, 2, 5, axis=1), [u(2, 6, 2)]),
        ],
        "expand": [
            (lambda x: ops.expand(x, (3, 4)), [u(1, 4)]),
            (lambda x: ops.expand(x, (2, 3, 4)), [u(3, 1)]),
            (lambda x: ops.expand(x, (5, 2)), [u(2)]),
        ],
        "transpose": [
            (ops.transpose, [u(3, 4)]),
            (ops.transpose, [u(2, 3, 4)]),
            (lambda x: ops.transpose(x, (2, 0, 1)), [u(2, 3, 4)]),
        ],
        "reshape": [
            (lambda x: ops.reshape(x, (4, 3)), [u(3, 4)]),
            (lambda x: ops.reshape(x, (6,)), [u(2, 3)]),
            (lambda x: ops.reshape(x, (2, 2, 3)), [u(4, 3)]),
        ],
        "take": [
            (lambda x: ops.take(x, [2, 0, 2], axis=0), [u(3, 4)]),
            (lambda x: ops.take(x, [1, 3], axis=-1), [u(2, 5)]),
            (lambda x: ops.take(x, [0, 0, 1], axis=1), [u(2, 3, 2)]),
        ],
        "mean": [
            (ops.mean, [u(3, 4)]),
            (lambda x: ops.mean(x, axis=-1), [u(2, 3, 4)]),
            (lambda x: ops.mean(x, axis=(0, 2), keepdims=True), [u(2, 3, 4)]),
        ],
        "sum": [
            (ops.sum, [u(3, 4)]),
            (lambda x: ops.sum(x, axis=0), [u(2, 3, 4)]),
            (lambda x: ops.sum(x, axis=-1, keepdims=True), [u(5, 2)]),
        ],
        "sinusoidal_embedding": [
            (lambda t: ops.sinusoidal_embedding(t, 8), [u(3)]),
            (lambda t: ops.sinusoidal_embedding(t, 5), [u(2)]),
            (lambda t: ops.sinusoidal_embedding(t, 16), [u(4)]),
        ],
        "fourier_features": [
            (lambda x: ops.fourier_features(x, 2), [u(1, 4)]),
            (lambda x: ops.fourier_features(x, 3), [u(2, 4)]),
            (lambda x: ops.fourier_features(x, 2), [u(3, 2)]),
        ],
    }


def run_op_suite(rng: np.random.Generator, only: Optional[Sequence[str]] = None) -> List[GradcheckResult]:
    """One aggregate result per op, worst case over its three shape cases."""
    results = []
    for name, cases in op_cases(rng).items():
        if only and name not in only:
            continue
        case_results = [check_op(name, fn, inputs, rng) for fn, inputs in cases]
        results.append(
            GradcheckResult(
                name,
                max(r.max_rel_error for r in case_results),
                OP_TOLERANCE,
                sum(r.checked for r in case_results),
            )
        )
    return results
