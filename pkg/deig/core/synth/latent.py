"""Fixed orthogonal patchify codec between RGB rasters and latent grids."""

from functools import lru_cache

import numpy as np
from einops import rearrange

from deig.core.commons.errors import ShapeMismatchError
from deig.core.commons.utils import make_rng

CODEC_SEED = 0


@lru_cache(maxsize=8)
def patch_basis(channels: int) -> np.ndarray:
    """Seeded orthogonal (channels, channels) matrix; QR with sign-fixed diagonal."""
    q, r = np.linalg.qr(make_rng(CODEC_SEED, "latent_codec", channels).normal(size=(channels, channels)))
    q = q * np.sign(np.diag(r))
    q.setflags(write=False)
    return q


class LatentCodec:
    """
    Maps (H, W, 3) rasters to (grid, grid, 3·p²) latents with p = H / grid.

    encode is a patchify followed by an orthogonal projection, so decode is its
    exact inverse and the Frobenius norm is preserved.
    """

    def __init__(self, resolution: int = 64, grid: int = 16):
        if resolution % grid:
            raise ShapeMismatchError("latent_codec", (resolution,), (grid,), detail="resolution not divisible by grid")
        self.resolution = resolution
        self.grid = grid
        self.patch = resolution // grid
        self.channels = 3 * self.patch * self.patch
        self.basis = patch_basis(self.channels)

    def encode(self, raster: np.ndarray) -> np.ndarray:
        raster = np.asarray(raster, dtype=np.float64)
        if raster.shape != (self.resolution, self.resolution, 3):
            raise ShapeMismatchError("encode_latent", raster.shape, (self.resolution, self.resolution, 3))
        patches = rearrange(raster, "(h p1) (w p2) c -> h w (p1 p2 c)", p1=self.patch, p2=self.patch)
        return patches @ self.basis

    def decode(self, latent: np.ndarray) -> np.ndarray:
        latent = np.asarray(latent, dtype=np.float64)
        if latent.shape != (self.grid, self.grid, self.channels):
            raise ShapeMismatchError("decode_latent", latent.shape, (self.grid, self.grid, self.channels))
        patches = latent @ self.basis.T
        return rearrange(patches, "h w (p1 p2 c) -> (h p1) (w p2) c", p1=self.patch, p2=self.patch)

    def to_model(self, raster: np.ndarray) -> np.ndarray:
        """Model-space latent: pixel range [0, 1] mapped to [-1, 1] before encoding."""
        return self.encode(2.0 * np.asarray(raster, dtype=np.float64) - 1.0)

    def from_model(self, latent: np.ndarray) -> np.ndarray:
        return (self.decode(latent) + 1.0) / 2.0
