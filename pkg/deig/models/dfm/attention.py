"""Masked gated self-attention fusing instance tokens into visual tokens."""

from typing import Optional

import numpy as np

from deig.core.commons.errors import ShapeMismatchError
from deig.core.interfaces.attention_kernel import AttentionKernel
from deig.core.tensor import Parameter, Tensor, ops
from deig.core.tensor.nn import Linear, Module, merge_heads, split_heads
from deig.models.dfm.blocksparse import BlockSparseKernel
from deig.models.dfm.mask import InstanceMask

LN_EPS = 1e-5


def dense_attention(q: Tensor, k: Tensor, v: Tensor, mask: InstanceMask) -> Tensor:
    out, _ = ops.scaled_dot_product_attention(q, k, v, mask.m)
    return out


def attention_flops(n_visual: int, n_instance_tokens: int, width: int) -> int:
    """FLOPs of the dense score and value products over [V, G_ase], two per multiply-add."""
    length = n_visual + n_instance_tokens
    return 4 * length * length * width


class GatedFusionAttention(Module):
    """
    V' = V + eta * tanh(gamma) * A_visual, where A is masked self-attention over
    [V, G_ase] and A_visual its first n_visual rows. gamma starts at 0, so a fresh
    module is the identity on V.
    """

    def __init__(
        self,
        width: int,
        channels: int,
        heads: int,
        rng: np.random.Generator,
        blocksparse: bool = False,
    ):
        super().__init__()
        if width % heads:
            raise ShapeMismatchError("gated_fusion_attention", (width,), (heads,), detail="width % heads")
        self.width = width
        self.heads = heads
        self.instance_proj = Linear(channels, width, rng)
        self.w_q = Linear(width, width, rng, bias=False)
        self.w_k = Linear(width, width, rng, bias=False)
        self.w_v = Linear(width, width, rng, bias=False)
        self.w_o = Linear(width, width, rng)
        self.gamma = Parameter(np.zeros(1))
        self.eta = Parameter(np.ones(1))
        self.kernel: AttentionKernel = BlockSparseKernel() if blocksparse else dense_attention
        self.capture = False
        self.last_weights: Optional[np.ndarray] = None

    @property
    def gate(self) -> float:
        return float(self.eta.data[0] * np.tanh(self.gamma.data[0]))

    def forward(self, visual: Tensor, g_ase: Tensor, mask: InstanceMask) -> Tensor:
        """
        Args:
            visual: (B, n_visual, width) visual tokens
            g_ase: (B, N, S, C) grounded semantic embeddings
            mask: Instance mask for this resolution

        Returns:
            (B, n_visual, width) updated visual tokens
        """
        batch, n_visual, _ = visual.shape
        cond_batch, n, s, c = g_ase.shape
        if n_visual != mask.n_visual or n != mask.n or s != mask.s:
            raise ShapeMismatchError("gated_fusion_attention", visual.shape, g_ase.shape, (mask.length,))
        if cond_batch != batch:
            if cond_batch != 1:
                raise ShapeMismatchError(
                    "gated_fusion_attention", visual.shape, g_ase.shape, detail="condition batch must be 1 or match"
                )
            g_ase = ops.expand(g_ase, (batch, n, s, c))
        instance = self.instance_proj(ops.reshape(g_ase, (batch, n * s, c)))
        tokens = ops.layer_norm(ops.concat([visual, instance], axis=1), LN_EPS)

        q = split_heads(self.w_q(tokens), self.heads)
        k = split_heads(self.w_k(tokens), self.heads)
        v = split_heads(self.w_v(tokens), self.heads)
        if self.capture:
            out, weights = ops.scaled_dot_product_attention(q, k, v, mask.m)
            self.last_weights = weights.data.copy()
        else:
            out = self.kernel(q, k, v, mask)
        attended = self.w_o(merge_heads(out))

        gate = ops.mul(self.eta, ops.tanh(self.gamma))
        return ops.add(visual, ops.mul(gate, ops.slice(attended, 0, n_visual, axis=1)))
