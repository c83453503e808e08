"""Block-sparse attention over the instance mask's token groups."""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from deig.core.commons.logger import get_logger
from deig.core.tensor import Tensor, ops
from deig.models.dfm.mask import InstanceMask

logger = get_logger(__name__)


@dataclass
class BlockPlan:
    """Token groups and, per query group, the key groups it may attend to."""

    groups: List[np.ndarray]
    allowed: List[List[int]]
    length: int

    @property
    def skip_ratio(self) -> float:
        """Fraction of score entries never computed."""
        sizes = [len(g) for g in self.groups]
        computed = sum(sizes[q] * sum(sizes[k] for k in keys) for q, keys in enumerate(self.allowed))
        return 1.0 - computed / float(self.length * self.length)


def plan_blocks(mask: InstanceMask) -> Optional[BlockPlan]:
    """
    Partition tokens into background visual, per-instance visual and per-instance tokens.

    Returns None when some visual token belongs to several instances; its rows then
    do not decompose into whole blocks.
    """
    if not mask.enabled or any(len(owners) > 1 for owners in mask.membership):
        return None
    n_visual = mask.n_visual
    background = [v for v, owners in enumerate(mask.membership) if not owners]
    named = {}
    if background:
        named["bg"] = np.array(background)
    for i in range(mask.n):
        members = mask.members(i)
        if members:
            named[f"vis{i}"] = np.array(members)
        named[f"ins{i}"] = np.arange(n_visual + i * mask.s, n_visual + (i + 1) * mask.s)

    keys = list(named)
    visual = [k for k in keys if not k.startswith("ins")]
    allowed = []
    for key in keys:
        if key == "bg":
            allowed.append([keys.index(k) for k in visual])
        elif key.startswith("vis"):
            i = key[3:]
            allowed.append([keys.index(k) for k in visual + [f"ins{i}"]])
        else:
            i = key[3:]
            own = [k for k in (f"vis{i}", f"ins{i}") if k in named]
            allowed.append([keys.index(k) for k in own])
    return BlockPlan([named[k] for k in keys], allowed, mask.length)


class BlockSparseKernel:
    """
    Attention computed block by block, skipping blocks the mask forbids entirely.

    Agrees with the dense kernel to floating-point accuracy. Irregular membership
    (overlapping instances) falls back to dense attention.
    """

    def __init__(self):
        self.last_skip_ratio = 0.0

    def __call__(self, q: Tensor, k: Tensor, v: Tensor, mask: InstanceMask) -> Tensor:
        plan = plan_blocks(mask)
        if plan is None:
            if mask.enabled:
                logger.info("Overlapping instance membership, falling back to dense attention")
            self.last_skip_ratio = 0.0
            out, _ = ops.scaled_dot_product_attention(q, k, v, mask.m)
            return out

        self.last_skip_ratio = plan.skip_ratio
        outputs, order = [], []
        for group, keys in zip(plan.groups, plan.allowed):
            key_idx = np.sort(np.concatenate([plan.groups[g] for g in keys]))
            q_g = ops.take(q, group, axis=-2)
            out, _ = ops.scaled_dot_product_attention(
                q_g, ops.take(k, key_idx, axis=-2), ops.take(v, key_idx, axis=-2)
            )
            outputs.append(out)
            order.append(group)
        inverse = np.argsort(np.concatenate(order))
        return ops.take(ops.concat(outputs, axis=-2), inverse, axis=-2)
