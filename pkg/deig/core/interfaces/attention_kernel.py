from typing import Protocol

from deig.core.tensor import Tensor


class AttentionKernel(Protocol):
    """Computes softmax(QKᵀ/√d + M)V for the joint visual/instance token sequence."""

    def __call__(self, q: Tensor, k: Tensor, v: Tensor, mask) -> Tensor:
        """
        Args:
            q, k, v: (B, H, L, d) projections
            mask: InstanceMask over the L tokens

        Returns:
            (B, H, L, d) attention output
        """
        ...
