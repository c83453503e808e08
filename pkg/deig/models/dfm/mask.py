"""Instance-aware attention mask over the joint [visual, instance] token sequence."""

from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Sequence

import numpy as np

from deig.config.constants import NEG_INF
from deig.core.commons.errors import ContractViolation
from deig.core.commons.logger import get_logger
from deig.core.condition import BoundingBox

logger = get_logger(__name__)


def assign_visual_membership(
    boxes: Sequence[BoundingBox], grid_h: int, grid_w: int
) -> List[FrozenSet[int]]:
    """
    Instances whose box contains each visual token's cell centre.

    Args:
        boxes: Instance boxes
        grid_h: Token grid rows
        grid_w: Token grid columns

    Returns:
        One set per token in row-major order; boundaries are inclusive
    """
    ys = (np.arange(grid_h) + 0.5) / grid_h
    xs = (np.arange(grid_w) + 0.5) / grid_w
    membership = [
        frozenset(i for i, box in enumerate(boxes) if box.contains(x, y)) for y in ys for x in xs
    ]
    covered = set().union(*membership) if membership else set()
    for i in range(len(boxes)):
        if i not in covered:
            logger.warning(f"Instance {i} covers no cell centre of the {grid_h}x{grid_w} grid")
    return membership


@dataclass
class InstanceMask:
    """Additive (L, L) mask with L = n_visual + n * s; instance tokens ordered by instance then dimension."""

    m: np.ndarray
    membership: List[FrozenSet[int]]
    n: int
    s: int
    enabled: bool = True

    @property
    def n_visual(self) -> int:
        return len(self.membership)

    @property
    def length(self) -> int:
        return self.n_visual + self.n * self.s

    def owner(self, token: int) -> int:
        """Instance index of a token, -1 for visual tokens."""
        if token < self.n_visual:
            return -1
        return (token - self.n_visual) // self.s

    def instance_tokens(self, i: int) -> range:
        start = self.n_visual + i * self.s
        return range(start, start + self.s)

    def members(self, i: int) -> List[int]:
        return [v for v, owners in enumerate(self.membership) if i in owners]

    def validate(self) -> None:
        """
        Raises:
            ContractViolation: If the mask breaks an isolation rule
        """
        if self.m.shape != (self.length, self.length):
            raise ContractViolation(f"Mask shape {self.m.shape} does not match L={self.length}")
        if not np.all((self.m == 0.0) | (self.m <= NEG_INF)):
            raise ContractViolation("Mask entries must be 0 or -inf")
        if np.any(np.diag(self.m) != 0.0):
            raise ContractViolation("Mask diagonal must be 0")
        if not np.array_equal(self.m == 0.0, (self.m == 0.0).T):
            raise ContractViolation("Mask must be symmetric")
        if self.enabled and np.any(self.m[: self.n_visual, : self.n_visual] != 0.0):
            raise ContractViolation("Visual tokens must attend to every visual token")

    def describe(self) -> Dict[str, Any]:
        return {
            "length": self.length,
            "n_visual": self.n_visual,
            "n_instances": self.n,
            "s": self.s,
            "enabled": self.enabled,
            "instances": [
                {
                    "index": i,
                    "token_start": self.instance_tokens(i).start,
                    "token_stop": self.instance_tokens(i).stop,
                    "visual_members": self.members(i),
                }
                for i in range(self.n)
            ],
            "allowed_fraction": float(np.mean(self.m == 0.0)),
        }


def build_instance_mask(
    membership: Sequence[FrozenSet[int]], n: int, s: int, enabled: bool = True
) -> InstanceMask:
    """
    Build the isolation mask.

    A visual token sees every visual token and the instance tokens of the instances
    covering it. An instance token sees its own instance's tokens and visual tokens
    inside its box. With ``enabled`` false every entry is 0.
    """
    if n < 1 or s < 1:
        raise ContractViolation(f"Mask needs n >= 1 and s >= 1, got n={n}, s={s}")
    membership = list(membership)
    n_visual = len(membership)
    length = n_visual + n * s
    if not enabled:
        return InstanceMask(np.zeros((length, length)), membership, n, s, enabled=False)

    member = np.zeros((n_visual, n), dtype=bool)
    for v, owners in enumerate(membership):
        for i in owners:
            if not 0 <= i < n:
                raise ContractViolation(f"Membership refers to instance {i} of {n}")
            member[v, i] = True
    owner = np.repeat(np.arange(n), s)

    allowed = np.zeros((length, length), dtype=bool)
    allowed[:n_visual, :n_visual] = True
    allowed[:n_visual, n_visual:] = member[:, owner]
    allowed[n_visual:, :n_visual] = member[:, owner].T
    allowed[n_visual:, n_visual:] = owner[:, None] == owner[None, :]
    return InstanceMask(np.where(allowed, 0.0, NEG_INF), membership, n, s)


def mask_for_boxes(
    boxes: Sequence[BoundingBox], grid_h: int, grid_w: int, s: int, enabled: bool = True
) -> InstanceMask:
    return build_instance_mask(assign_visual_membership(boxes, grid_h, grid_w), len(boxes), s, enabled)
