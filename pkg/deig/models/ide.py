"""Instance Detail Extractor.

Learnable queries (1, 1, S, C) are broadcast over batch and instances and refined
by time-conditioned layers::

    h_sa = h + SelfAttn(AdaLN(h, t))
    h_ca = h_sa + CrossAttn(AdaLN(h_sa, t), kv=[h_sa, E_tau_i])
    out  = h_ca + FF(LN(h_ca))

Attention runs per (batch, instance) pair, so no information crosses instances.
"""

from typing import List, Optional, Sequence, Union

import numpy as np

from deig.config.constants import NEG_INF
from deig.config.settings import IdeConfig
from deig.core.commons.errors import ContractViolation, ShapeMismatchError
from deig.core.interfaces.text_encoder import TextFeatureBatch
from deig.core.tensor import Parameter, Tensor, ops
from deig.core.tensor.nn import MLP, Linear, Module, ModuleList, MultiHeadAttention

LN_EPS = 1e-5
Timesteps = Union[int, Sequence[int], np.ndarray]


def as_timesteps(t: Timesteps, t_max: int) -> np.ndarray:
    steps = np.atleast_1d(np.asarray(t))
    if steps.ndim != 1 or not np.all(np.equal(np.mod(steps, 1), 0)):
        raise ContractViolation(f"Timesteps must be integers, got {t!r}")
    if np.any(steps < 0) or np.any(steps >= t_max):
        raise ContractViolation(f"Timestep out of range [0, {t_max}): {steps.tolist()}")
    return steps.astype(np.float64)


class TimeMLP(Module):
    """Sinusoidal embedding followed by Linear-SiLU-Linear."""

    def __init__(self, dim: int, t_max: int, rng: np.random.Generator):
        super().__init__()
        self.dim = dim
        self.t_max = t_max
        self.mlp = MLP(dim, dim, dim, rng, activation="silu")

    def forward(self, t: Timesteps) -> Tensor:
        steps = Tensor(as_timesteps(t, self.t_max))
        return self.mlp(ops.sinusoidal_embedding(steps, self.dim))


class AdaLN(Module):
    """layer_norm(x) * (1 + scale(t_emb)) + shift(t_emb); the modulation is zero-initialised."""

    def __init__(self, channels: int, time_dim: int, rng: np.random.Generator):
        super().__init__()
        self.channels = channels
        self.modulation = Linear(time_dim, 2 * channels, rng, zero_init=True)

    def forward(self, x: Tensor, t_emb: Tensor) -> Tensor:
        if x.shape[-1] != self.channels:
            raise ShapeMismatchError("adaln_modulate", x.shape, (self.channels,))
        batch = t_emb.shape[0]
        mod = ops.reshape(self.modulation(t_emb), (batch, *([1] * (x.ndim - 2)), 2 * self.channels))
        scale = ops.slice(mod, 0, self.channels, axis=-1)
        shift = ops.slice(mod, self.channels, 2 * self.channels, axis=-1)
        return ops.add(ops.mul(ops.layer_norm(x, LN_EPS), ops.add(scale, 1.0)), shift)


class IdeLayer(Module):
    def __init__(self, config: IdeConfig, rng: np.random.Generator):
        super().__init__()
        c = config.channels
        self.norm_sa = AdaLN(c, config.time_dim, rng)
        self.self_attn = MultiHeadAttention(c, config.heads, rng, zero_init_out=True)
        self.norm_ca = AdaLN(c, config.time_dim, rng)
        self.cross_attn = MultiHeadAttention(c, config.heads, rng, zero_init_out=True)
        self.ff = MLP(c, 4 * c, c, rng, activation="gelu", zero_init_out=True)

    def forward(
        self, h: Tensor, e_tau: Tensor, t_emb: Tensor, key_mask: Optional[np.ndarray] = None
    ) -> Tensor:
        if h.shape[1] != e_tau.shape[1] or e_tau.shape[0] not in (1, h.shape[0]):
            raise ShapeMismatchError("ide_layer_forward", h.shape, e_tau.shape)
        h_sa = ops.add(h, self.self_attn(self.norm_sa(h, t_emb)))
        kv = ops.concat([h_sa, ops.expand(e_tau, (*h_sa.shape[:2], *e_tau.shape[2:]))], axis=-2)
        h_ca = ops.add(h_sa, self.cross_attn(self.norm_ca(h_sa, t_emb), context=kv, mask=key_mask))
        return ops.add(h_ca, self.ff(ops.layer_norm(h_ca, LN_EPS)))


def cross_key_mask(lengths: Optional[Sequence[int]], s: int, s_tau: int) -> Optional[np.ndarray]:
    """(1, N, 1, S, S + S_tau) mask hiding caption pad positions from the queries."""
    if lengths is None:
        return None
    mask = np.zeros((1, len(lengths), 1, s, s + s_tau))
    for i, length in enumerate(lengths):
        mask[0, i, 0, :, s + length :] = NEG_INF
    return mask


def _unpack(e_tau: Union[Tensor, TextFeatureBatch]):
    if isinstance(e_tau, TextFeatureBatch):
        return e_tau.features, e_tau.lengths
    return e_tau, None


class InstanceDetailExtractor(Module):
    """Distils (B, N, S_tau, C) frozen text features into (B, N, S, C) aggregated semantic embeddings."""

    def __init__(self, config: IdeConfig, t_max: int, rng: np.random.Generator):
        super().__init__()
        if config.channels % config.heads:
            raise ContractViolation("ide.channels must be divisible by ide.heads")
        self.config = config
        self.queries = Parameter(rng.normal(0.0, 0.02, (1, 1, config.s, config.channels)))
        self.time_mlp = TimeMLP(config.time_dim, t_max, rng)
        self.layers = ModuleList([IdeLayer(config, rng) for _ in range(config.n_layers)])

    def forward(self, e_tau: Union[Tensor, TextFeatureBatch], t: Timesteps) -> Tensor:
        features, lengths = _unpack(e_tau)
        if features.ndim != 4 or features.shape[-1] != self.config.channels:
            raise ShapeMismatchError("ide_forward", features.shape, (None, None, None, self.config.channels))
        batch, n = features.shape[:2]
        t_emb = self.time_mlp(t)
        if t_emb.shape[0] != batch:
            t_emb = ops.expand(t_emb, (batch, t_emb.shape[1]))
        h = ops.expand(self.queries, (batch, n, self.config.s, self.config.channels))
        mask = cross_key_mask(lengths, self.config.s, features.shape[2])
        for layer in self.layers:
            h = layer(h, features, t_emb, mask)
        return h

    def set_capture(self, enabled: bool) -> None:
        for layer in self.layers:
            layer.cross_attn.capture = enabled

    def captured_weights(self) -> List[Optional[np.ndarray]]:
        """Per layer cross-attention weights (B, N, heads, S, S + S_tau) of the last forward."""
        return [layer.cross_attn.last_weights for layer in self.layers]


class DirectProjection(Module):
    """IDE-free variant: a linear map of the first S text tokens."""

    def __init__(self, config: IdeConfig, t_max: int, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.t_max = t_max
        self.proj = Linear(config.channels, config.channels, rng)

    def forward(self, e_tau: Union[Tensor, TextFeatureBatch], t: Timesteps) -> Tensor:
        as_timesteps(t, self.t_max)
        features, _ = _unpack(e_tau)
        return self.proj(ops.slice(features, 0, self.config.s, axis=-2))

    def set_capture(self, enabled: bool) -> None:
        pass

    def captured_weights(self) -> List[Optional[np.ndarray]]:
        return []


def build_extractor(config: IdeConfig, t_max: int, rng: np.random.Generator) -> Module:
    if config.enabled:
        return InstanceDetailExtractor(config, t_max, rng)
    return DirectProjection(config, t_max, rng)
