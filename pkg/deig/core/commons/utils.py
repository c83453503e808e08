from hashlib import sha256
from pathlib import Path
from typing import Optional, Union

import numpy as np

U64_MASK = (1 << 64) - 1


def derive_seed(seed: int, *labels: Union[str, int]) -> int:
    """Derive an independent u64 seed for a named sub-stream using SHA-256."""
    material = ":".join([str(seed & U64_MASK), *[str(label) for label in labels]])
    return int.from_bytes(sha256(material.encode()).digest()[:8], "little")


def make_rng(seed: int, *labels: Union[str, int]) -> np.random.Generator:
    """Create a PCG64 generator for a (seed, labels) sub-stream."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *labels)))


def resolve_output(path: Union[str, Path], output_dir: Optional[Union[str, Path]]) -> Path:
    """Resolve a relative artifact path against the configured output directory."""
    path = Path(path)
    if path.is_absolute() or output_dir is None:
        return path
    return Path(output_dir) / path
