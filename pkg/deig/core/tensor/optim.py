from typing import Dict, List, Sequence

import numpy as np

from deig.core.commons.errors import ContractViolation
from deig.core.tensor.tensor import Parameter


def warmup_lr(base_lr: float, step: int, warmup_steps: int) -> float:
    """Linear warm-up to ``base_lr``, constant afterwards."""
    if warmup_steps <= 0:
        return base_lr
    return base_lr * min(1.0, (step + 1) / warmup_steps)


class Optimizer:
    def __init__(self, params: Sequence[Parameter], lr: float, warmup_steps: int = 0):
        if lr <= 0:
            raise ContractViolation(f"learning rate must be positive, got {lr}")
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.warmup_steps = warmup_steps
        self.step_count = 0

    @property
    def current_lr(self) -> float:
        return warmup_lr(self.lr, self.step_count, self.warmup_steps)

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        lr = self.current_lr
        for index, param in enumerate(self.params):
            if param.requires_grad and param.grad is not None:
                self._update(index, param, lr)
        self.step_count += 1

    def _update(self, index: int, param: Parameter, lr: float) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    def _update(self, index: int, param: Parameter, lr: float) -> None:
        param.data = param.data - lr * param.grad


class AdamW(Optimizer):
    """
    Adam with decoupled weight decay.

    Decay applies to every parameter of rank >= 2: weight matrices, the
    positional embedding and the extractor's (1, 1, S, C) learned queries.
    Rank-1 parameters (biases, gates and the null grounding vector) are not decayed.
    """

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-3,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        warmup_steps: int = 0,
    ):
        super().__init__(params, lr, warmup_steps)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._m: Dict[int, np.ndarray] = {}
        self._v: Dict[int, np.ndarray] = {}
        self._t: Dict[int, int] = {}

    def _update(self, index: int, param: Parameter, lr: float) -> None:
        grad = param.grad
        m = self._m.get(index, np.zeros_like(grad))
        v = self._v.get(index, np.zeros_like(grad))
        t = self._t.get(index, 0) + 1
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
        m_hat = m / (1.0 - self.beta1**t)
        v_hat = v / (1.0 - self.beta2**t)
        data = param.data
        if self.weight_decay and data.ndim >= 2:
            data = data - lr * self.weight_decay * data
        param.data = data - lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self._m[index], self._v[index], self._t[index] = m, v, t
