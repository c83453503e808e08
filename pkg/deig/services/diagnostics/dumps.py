"""Mask and attention-map dumps for inspection."""

import csv
import json
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from deig.config.settings import RunConfig
from deig.core.commons.errors import ContractViolation
from deig.core.commons.logger import get_logger
from deig.core.commons.utils import make_rng
from deig.core.condition import GenerationCondition
from deig.core.synth.io import write_pgm
from deig.core.tensor import no_grad
from deig.core.text.encoder import TextSimEncoder
from deig.models.deig_model import DeigModel, prepare_condition
from deig.models.dfm.mask import InstanceMask, mask_for_boxes

logger = get_logger(__name__)

PathLike = Union[str, Path]


def dump_mask(
    cond: GenerationCondition, config: RunConfig, out_prefix: PathLike, level: int = 0
) -> List[Path]:
    """
    Write the instance mask as a PGM (white = attend, black = blocked) plus a JSON sidecar.

    Args:
        cond: Condition whose boxes define the mask
        config: Provides the token grid, S and the mask switch
        out_prefix: Output path without extension
        level: 0 for the full token grid, 1 for the merged grid
    """
    if level not in (0, 1):
        raise ContractViolation(f"Mask level must be 0 or 1, got {level}")
    grid = config.diffusion.grid >> level
    mask = mask_for_boxes(cond.boxes, grid, grid, config.ide.s, config.dfm.use_instance_mask)
    mask.validate()
    out_prefix = Path(out_prefix)
    image = write_pgm(out_prefix.with_suffix(".pgm"), (mask.m == 0.0).astype(np.float64))
    sidecar = out_prefix.with_suffix(".json")
    sidecar.write_text(json.dumps({"grid": grid, "level": level, **mask.describe()}, indent=2) + "\n")
    logger.info(f"Wrote {mask.length}x{mask.length} mask to {image}")
    return [image, sidecar]


def write_matrix(path: Path, matrix: np.ndarray, row_labels: Sequence[str], col_labels: Sequence[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["", *col_labels])
        for label, row in zip(row_labels, matrix):
            writer.writerow([label, *(f"{value:.6g}" for value in row)])
    return path


def _visual_labels(mask: InstanceMask) -> List[str]:
    side = int(round(np.sqrt(mask.n_visual)))
    return [f"v{r}_{c}" for r in range(side) for c in range(side)]


def dump_attention(
    model: DeigModel,
    encoder: TextSimEncoder,
    cond: GenerationCondition,
    out_dir: PathLike,
    layer: int,
    t: int,
    seed: int = 0,
) -> List[Path]:
    """
    Run one denoising forward pass and write head-averaged attention maps.

    ``ide_layer{l}_inst{i}.csv`` holds IDE cross-attention of each semantic
    dimension over [latent queries, caption tokens]. ``dfm_block{l}_inst{i}.csv``
    holds, per semantic dimension, the attention every visual token pays to it.

    Raises:
        ContractViolation: If layer or t is out of range
    """
    config = model.config
    model.schedule.check(t)
    n_blocks = len(model.backbone.blocks)
    n_ide = len(model.ide.captured_weights())
    if not (0 <= layer < max(n_blocks, n_ide)):
        raise ContractViolation(f"Layer {layer} out of range (IDE {n_ide}, backbone {n_blocks})")

    inputs = prepare_condition(cond, encoder, config)
    diffusion = config.diffusion
    x_t = make_rng(seed, "dump_attn").normal(size=(1, diffusion.grid, diffusion.grid, diffusion.latent_channels))
    block = model.backbone.blocks[layer] if layer < n_blocks else None
    dfm = block.dfm if block is not None else None

    model.ide.set_capture(True)
    if dfm is not None:
        dfm.capture = True
    try:
        with no_grad():
            model(x_t, [t], inputs)
    finally:
        model.ide.set_capture(False)
        if dfm is not None:
            dfm.capture = False

    out_dir = Path(out_dir)
    written: List[Path] = []
    s = config.ide.s
    ide_weights = model.ide.captured_weights()
    if layer < len(ide_weights) and ide_weights[layer] is not None:
        averaged = ide_weights[layer].mean(axis=2)[0]
        for i in range(averaged.shape[0]):
            cols = [f"latent{k}" for k in range(s)] + [f"tok{k}" for k in range(averaged.shape[-1] - s)]
            rows = [f"s{k}" for k in range(s)]
            written.append(write_matrix(out_dir / f"ide_layer{layer}_inst{i}.csv", averaged[i], rows, cols))
    if dfm is not None and dfm.last_weights is not None:
        mask = inputs.masks[block.level]
        averaged = dfm.last_weights.mean(axis=1)[0]
        labels = _visual_labels(mask)
        for i in range(mask.n):
            tokens = list(mask.instance_tokens(i))
            per_dim = averaged[: mask.n_visual, tokens].T
            written.append(
                write_matrix(out_dir / f"dfm_block{layer}_inst{i}.csv", per_dim, [f"s{k}" for k in range(s)], labels)
            )
    logger.info(f"Wrote {len(written)} attention maps to {out_dir}")
    return written
