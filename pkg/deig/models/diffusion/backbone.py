"""Patch-token transformer denoiser with a two-level token hierarchy."""

from typing import Dict, Optional, Union

import numpy as np

from deig.config.settings import RunConfig
from deig.core.commons.errors import ShapeMismatchError
from deig.core.tensor import Parameter, Tensor, ops
from deig.core.tensor.nn import MLP, Linear, Module, ModuleList, MultiHeadAttention
from deig.models.dfm.attention import GatedFusionAttention
from deig.models.dfm.mask import InstanceMask
from deig.models.ide import LN_EPS, TimeMLP, Timesteps


def merge_tokens(h: Tensor, grid: int) -> Tensor:
    """(B, grid², D) -> (B, (grid/2)², 4D), gathering each 2x2 cell."""
    batch, _, d = h.shape
    half = grid // 2
    h = ops.reshape(h, (batch, half, 2, half, 2, d))
    h = ops.transpose(h, (0, 1, 3, 2, 4, 5))
    return ops.reshape(h, (batch, half * half, 4 * d))


def split_tokens(h: Tensor, grid: int) -> Tensor:
    """(B, (grid/2)², 4D) -> (B, grid², D); inverse of :func:`merge_tokens`."""
    batch, _, d4 = h.shape
    half = grid // 2
    d = d4 // 4
    h = ops.reshape(h, (batch, half, half, 2, 2, d))
    h = ops.transpose(h, (0, 1, 3, 2, 4, 5))
    return ops.reshape(h, (batch, grid * grid, d))


class BackboneBlock(Module):
    """Self-attention, optional DFM, cross-attention to the global prompt, feed-forward."""

    def __init__(self, config: RunConfig, level: int, with_dfm: bool, rng: np.random.Generator):
        super().__init__()
        d = config.diffusion.width
        c = config.text_sim.channels
        self.level = level
        self.self_attn = MultiHeadAttention(d, config.diffusion.heads, rng)
        self.dfm = (
            GatedFusionAttention(d, c, config.dfm.heads, rng, blocksparse=config.dfm.use_blocksparse)
            if with_dfm
            else None
        )
        self.cross_attn = MultiHeadAttention(d, config.diffusion.heads, rng, context_dim=c)
        self.ff = MLP(d, 4 * d, d, rng, activation="gelu")

    def forward(
        self,
        h: Tensor,
        global_features: Tensor,
        g_ase: Optional[Tensor] = None,
        mask: Optional[InstanceMask] = None,
    ) -> Tensor:
        h = ops.add(h, self.self_attn(ops.layer_norm(h, LN_EPS)))
        if self.dfm is not None and g_ase is not None:
            h = self.dfm(h, g_ase, mask)
        h = ops.add(h, self.cross_attn(ops.layer_norm(h, LN_EPS), context=global_features))
        return ops.add(h, self.ff(ops.layer_norm(h, LN_EPS)))


class Denoiser(Module):
    """
    Predicts the noise in a (B, grid, grid, channels) latent.

    Blocks run at level 0 (full token grid) or level 1 (2x2-merged grid); a change
    of level merges tokens or splits them back with a skip connection. Instance
    conditioning enters only through the per-block DFMs.
    """

    def __init__(self, config: RunConfig, rng: np.random.Generator):
        super().__init__()
        dif = config.diffusion
        self.grid = dif.grid
        self.channels = dif.latent_channels
        self.width = dif.width
        self.patch_embed = Linear(self.channels, dif.width, rng)
        self.pos_embed = Parameter(rng.normal(0.0, 0.02, (dif.grid * dif.grid, dif.width)))
        self.time_mlp = TimeMLP(dif.width, dif.t_max, rng)
        if 1 in dif.block_levels:
            self.merge = Linear(4 * dif.width, dif.width, rng)
            self.split = Linear(dif.width, 4 * dif.width, rng)
        enabled = config.dfm.enabled_blocks or [True] * dif.n_blocks
        self.blocks = ModuleList(
            [BackboneBlock(config, level, on, rng) for level, on in zip(dif.block_levels, enabled)]
        )
        self.out = Linear(dif.width, self.channels, rng, zero_init=True)

    def dfm_modules(self):
        return [block.dfm for block in self.blocks if block.dfm is not None]

    def forward(
        self,
        x_t: Union[Tensor, np.ndarray],
        t: Timesteps,
        global_features: Tensor,
        g_ase: Optional[Tensor] = None,
        masks: Optional[Dict[int, InstanceMask]] = None,
    ) -> Tensor:
        x_t = x_t if isinstance(x_t, Tensor) else Tensor(x_t)
        expected = (self.grid, self.grid, self.channels)
        if x_t.ndim != 4 or x_t.shape[1:] != expected:
            raise ShapeMismatchError("denoiser_forward", x_t.shape, (None, *expected))
        batch = x_t.shape[0]
        h = self.patch_embed(ops.reshape(x_t, (batch, self.grid * self.grid, self.channels)))
        t_emb = ops.reshape(self.time_mlp(t), (-1, 1, self.width))
        h = ops.add(ops.add(h, self.pos_embed), t_emb)

        level, skip = 0, None
        for block in self.blocks:
            if block.level != level:
                if block.level == 1:
                    skip, h = h, self.merge(merge_tokens(h, self.grid))
                else:
                    h = ops.add(split_tokens(self.split(h), self.grid), skip)
                level = block.level
            mask = masks.get(level) if masks else None
            h = block(h, global_features, g_ase, mask)
        if level == 1:
            h = ops.add(split_tokens(self.split(h), self.grid), skip)

        h = self.out(ops.layer_norm(h, LN_EPS))
        return ops.reshape(h, (batch, *expected))
