import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from deig.core.commons.errors import ContractViolation, UsageError
from deig.core.commons.logger import get_logger

logger = get_logger(__name__)

EFFECTIVE_CONFIG_FILE = "config.effective.json"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TextSimConfig(_Section):
    """Frozen toy text encoder"""

    seed: int = Field(default=0, ge=0, lt=2**64)
    channels: int = Field(default=64, ge=2)
    max_tokens: int = Field(default=24, ge=2)
    max_global_tokens: int = Field(default=96, ge=2)


class IdeConfig(_Section):
    """Instance Detail Extractor"""

    enabled: bool = True  # false: direct projection of the first s text tokens
    s: int = Field(default=16, ge=1)
    n_layers: int = Field(default=6, ge=1)
    channels: int = Field(default=64, ge=2)
    heads: int = Field(default=4, ge=1)
    time_dim: int = Field(default=64, ge=2)


class DfmConfig(_Section):
    """Detail Fusion Module"""

    n_freqs: int = Field(default=8, ge=1)
    heads: int = Field(default=4, ge=1)
    use_blocksparse: bool = False
    use_instance_mask: bool = True
    enabled_blocks: Optional[List[bool]] = None  # one flag per backbone block, default all on


class DiffusionConfig(_Section):
    """Toy latent-grid DDPM backbone"""

    t_max: int = Field(default=200, ge=1)
    beta_start: float = Field(default=1e-4, gt=0, lt=1)
    beta_end: float = Field(default=0.02, gt=0, lt=1)
    resolution: int = Field(default=64, ge=2)
    grid: int = Field(default=16, ge=1)
    width: int = Field(default=64, ge=2)
    heads: int = Field(default=4, ge=1)
    block_levels: List[int] = Field(default_factory=lambda: [0, 1, 1, 0])
    max_instances: int = Field(default=10, ge=1)

    @property
    def patch(self) -> int:
        return self.resolution // self.grid

    @property
    def latent_channels(self) -> int:
        return 3 * self.patch * self.patch

    @property
    def n_blocks(self) -> int:
        return len(self.block_levels)


class BenchConfig(_Section):
    """Synthetic scene generator"""

    mode: Literal["bench", "train"] = "bench"
    count: int = Field(default=100, ge=1)
    min_instances: Optional[int] = Field(default=None, ge=1)
    max_instances: Optional[int] = Field(default=None, ge=1)
    person_fraction: float = Field(default=0.3, ge=0, le=1)
    levels: Optional[List[str]] = None  # restrict the level draw, e.g. ["L1"]
    area_min: float = Field(default=0.10, gt=0, le=1)
    area_max: float = Field(default=0.60, gt=0, le=1)
    max_iou: float = Field(default=0.05, ge=0, le=1)
    retry_budget: int = Field(default=200, ge=1)
    coarse_captions: bool = False

    def instance_range(self) -> "tuple[int, int]":
        if self.mode == "bench":
            low, high = self.min_instances or 3, self.max_instances or 6
        else:
            low, high = self.min_instances or 1, self.max_instances or 2
        return low, high


class TrainConfig(_Section):
    """Two-phase training"""

    dataset_size: int = Field(default=64, ge=1)
    pretrain_steps: int = Field(default=100, ge=0)
    steps: int = Field(default=200, ge=0)
    batch_size: int = Field(default=4, ge=1)
    grad_accum: int = Field(default=1, ge=1)
    optimizer: Literal["adamw", "sgd"] = "adamw"
    lr: float = Field(default=1e-3, gt=0)
    pretrain_lr: float = Field(default=1e-3, gt=0)
    warmup_steps: int = Field(default=10, ge=0)
    weight_decay: float = Field(default=0.0, ge=0)
    log_every: int = Field(default=10, ge=1)


class EvalConfig(_Section):
    """Oracle evaluation"""

    held_out: int = Field(default=20, ge=1)
    dilation_px: int = Field(default=4, ge=0)
    min_pixels: int = Field(default=16, ge=1)
    texture_threshold: float = Field(default=0.1, gt=0)


class RunConfig(BaseModel):
    """Effective configuration of one run. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0, lt=2**64)
    output_dir: str = "out"
    text_sim: TextSimConfig = Field(default_factory=TextSimConfig)
    ide: IdeConfig = Field(default_factory=IdeConfig)
    dfm: DfmConfig = Field(default_factory=DfmConfig)
    diffusion: DiffusionConfig = Field(default_factory=DiffusionConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @model_validator(mode="after")
    def check_consistency(self) -> "RunConfig":
        if self.ide.channels != self.text_sim.channels:
            raise ValueError("ide.channels must equal text_sim.channels")
        if self.ide.channels % self.ide.heads:
            raise ValueError("ide.channels must be divisible by ide.heads")
        if self.text_sim.channels % 2:
            raise ValueError("text_sim.channels must be even")
        if self.ide.s > self.text_sim.max_tokens:
            raise ValueError("ide.s must not exceed text_sim.max_tokens")
        if self.diffusion.width % self.dfm.heads or self.diffusion.width % self.diffusion.heads:
            raise ValueError("diffusion.width must be divisible by dfm.heads and diffusion.heads")
        if self.diffusion.resolution % self.diffusion.grid:
            raise ValueError("diffusion.resolution must be divisible by diffusion.grid")
        if any(level not in (0, 1) for level in self.diffusion.block_levels):
            raise ValueError("diffusion.block_levels entries must be 0 or 1")
        if 1 in self.diffusion.block_levels and self.diffusion.grid % 2:
            raise ValueError("a low-resolution block needs an even diffusion.grid")
        if self.diffusion.beta_start > self.diffusion.beta_end:
            raise ValueError("diffusion.beta_start must not exceed diffusion.beta_end")
        blocks = self.dfm.enabled_blocks
        if blocks is not None and len(blocks) != self.diffusion.n_blocks:
            raise ValueError("dfm.enabled_blocks needs one flag per backbone block")
        low, high = self.bench.instance_range()
        if low > high:
            raise ValueError("bench.min_instances must not exceed bench.max_instances")
        if high > self.diffusion.max_instances:
            raise ValueError("bench instance count exceeds diffusion.max_instances")
        if self.bench.area_min > self.bench.area_max:
            raise ValueError("bench.area_min must not exceed bench.area_max")
        return self

    def model_dict(self) -> Dict[str, Any]:
        """Sections that define the model architecture (embedded in checkpoints)."""
        return self.model_dump(include={"seed", "text_sim", "ide", "dfm", "diffusion"})

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Return a copy with dotted-key overrides applied, e.g. {"ide.s": 4}."""
        data = self.model_dump()
        for dotted, value in overrides.items():
            node = data
            *path, leaf = dotted.split(".")
            for key in path:
                if key not in node or not isinstance(node[key], dict):
                    raise ContractViolation(f"Unknown config key {dotted}")
                node = node[key]
            if leaf not in node:
                raise ContractViolation(f"Unknown config key {dotted}")
            node[leaf] = value
        return build_config(data)


def build_config(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ContractViolation(f"Invalid configuration: {e}") from e


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load a run configuration.

    Args:
        path: JSON document; missing keys take their defaults. None gives the defaults.

    Returns:
        RunConfig with the DEIG_SEED environment override applied

    Raises:
        UsageError: If the file does not exist or is not JSON
        ContractViolation: If keys are unknown or values invalid
    """
    load_dotenv()
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"Config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"Config file {path} is not valid JSON: {e}") from e
    env_seed = os.getenv("DEIG_SEED")
    if env_seed:
        try:
            data["seed"] = int(env_seed)
        except ValueError as e:
            raise UsageError(f"DEIG_SEED must be an integer, got {env_seed!r}") from e
        logger.info(f"Seed overridden by DEIG_SEED={env_seed}")
    return build_config(data)


def echo_config(config: RunConfig, output_dir: Optional[Union[str, Path]] = None) -> Path:
    """Write the effective configuration next to the run's artifacts."""
    target = Path(output_dir or config.output_dir) / EFFECTIVE_CONFIG_FILE
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(config.model_dump(), indent=2, sort_keys=True) + "\n")
    return target
