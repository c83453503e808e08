"""Spatial grounding of aggregated semantic embeddings."""

from typing import Sequence

import numpy as np

from deig.core.commons.errors import ContractViolation, ShapeMismatchError
from deig.core.condition import BoundingBox
from deig.core.tensor import Parameter, Tensor, ops
from deig.core.tensor.nn import MLP, Linear, Module


def box_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    return np.array([box.as_list() for box in boxes], dtype=np.float64).reshape(-1, 4)


def fourier_encode_box(box: BoundingBox, n_freqs: int) -> Tensor:
    """Fourier features of one box: an (8 * n_freqs,) vector."""
    return ops.fourier_features(Tensor(box_array([box])[0]), n_freqs)


def broadcast_grounding(vector: Tensor, s: int) -> Tensor:
    """Replicate a grounding vector across the S semantic dimensions: (D,) -> (S, D)."""
    if vector.ndim != 1:
        raise ShapeMismatchError("broadcast_grounding", vector.shape, detail="expects a vector")
    return ops.expand(ops.reshape(vector, (1, vector.shape[0])), (s, vector.shape[0]))


class GroundingFuser(Module):
    """
    Fuses box position into aggregated semantic embeddings.

    For instance i with flag m_i the spatial vector is m_i * W F(b_i) + (1 - m_i) * e_null,
    broadcast across the S dimensions, concatenated with E_ase,i along channels and mapped
    back to C channels by a two-layer MLP.
    """

    def __init__(self, channels: int, n_freqs: int, rng: np.random.Generator):
        super().__init__()
        self.channels = channels
        self.n_freqs = n_freqs
        self.box_proj = Linear(8 * n_freqs, channels, rng)
        self.e_null = Parameter(rng.normal(0.0, 0.02, channels))
        self.fuse = MLP(2 * channels, channels, channels, rng, activation="silu")

    def forward(self, e_ase: Tensor, boxes: Sequence[BoundingBox], m_flags: Sequence[int]) -> Tensor:
        if e_ase.ndim != 4 or e_ase.shape[-1] != self.channels:
            raise ShapeMismatchError("grounding_fuse", e_ase.shape, (None, None, None, self.channels))
        batch, n, s, c = e_ase.shape
        if len(boxes) != n or len(m_flags) != n:
            raise ContractViolation(f"{n} embeddings but {len(boxes)} boxes and {len(m_flags)} flags")
        flags = np.asarray(m_flags, dtype=np.float64).reshape(n, 1)
        spatial = self.box_proj(ops.fourier_features(Tensor(box_array(boxes)), self.n_freqs))
        selected = ops.add(ops.mul(spatial, flags), ops.mul(ops.reshape(self.e_null, (1, c)), 1.0 - flags))
        grounded = ops.expand(ops.reshape(selected, (1, n, 1, c)), (batch, n, s, c))
        return self.fuse(ops.concat([grounded, e_ase], axis=-1))
