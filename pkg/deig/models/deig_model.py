"""Full DEIG model: IDE, grounding fuser and a DFM-equipped denoiser."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from deig.config.constants import CONFIG_ENTRY, VOCAB_ENTRY
from deig.config.settings import RunConfig, build_config
from deig.core.commons.errors import CheckpointError
from deig.core.commons.logger import get_logger
from deig.core.commons.utils import make_rng
from deig.core.condition import GenerationCondition
from deig.core.interfaces.text_encoder import TextEncoder, TextFeatureBatch
from deig.core.tensor import Parameter, Tensor, ops
from deig.core.tensor.checkpoint import (
    decode_json_entry,
    encode_json_entry,
    load_checkpoint,
    save_checkpoint,
)
from deig.core.tensor.nn import Module
from deig.core.text.encoder import TextSimEncoder
from deig.core.text.vocab import TokenVocab
from deig.models.dfm.attention import attention_flops
from deig.models.dfm.grounding import GroundingFuser
from deig.models.dfm.mask import InstanceMask, mask_for_boxes
from deig.models.diffusion.backbone import Denoiser
from deig.models.diffusion.schedule import NoiseSchedule
from deig.models.ide import Timesteps, build_extractor

logger = get_logger(__name__)

# Seeds only parameter initialisation, which a checkpoint overrides
RUN_SEED_KEY = "seed"


@dataclass
class ConditionInputs:
    """Everything a forward pass needs from one generation condition, computed once."""

    condition: GenerationCondition
    instance_features: TextFeatureBatch
    global_features: Tensor
    masks: Dict[int, InstanceMask]


def prepare_condition(cond: GenerationCondition, encoder: TextEncoder, config: RunConfig) -> ConditionInputs:
    """
    Encode captions and build one instance mask per token-grid resolution.

    Raises:
        ContractViolation: If the condition exceeds the configured instance capacity
    """
    cond.check_capacity(config.diffusion.max_instances)
    instance_features, global_prompt = encoder.encode_condition(cond)
    global_features = ops.slice(global_prompt.features, 0, max(global_prompt.length, 1), axis=1)
    masks = {}
    for level in sorted(set(config.diffusion.block_levels)):
        grid = config.diffusion.grid >> level
        masks[level] = mask_for_boxes(cond.boxes, grid, grid, config.ide.s, config.dfm.use_instance_mask)
    return ConditionInputs(cond, instance_features, global_features, masks)


class DeigModel(Module):
    def __init__(self, config: RunConfig):
        super().__init__()
        self.config = config
        rng = make_rng(config.seed, "model")
        self.schedule = NoiseSchedule.from_config(config.diffusion)
        self.ide = build_extractor(config.ide, config.diffusion.t_max, rng)
        self.grounding = GroundingFuser(config.ide.channels, config.dfm.n_freqs, rng)
        self.backbone = Denoiser(config, rng)
        self.assign_names()

    def backbone_parameters(self) -> List[Tuple[str, Parameter]]:
        return [(n, p) for n, p in self.named_parameters() if n.startswith("backbone.") and ".dfm." not in n]

    def instance_parameters(self) -> List[Tuple[str, Parameter]]:
        """IDE, grounding fuser and DFM parameters: the ones trained in the second phase."""
        backbone = {n for n, _ in self.backbone_parameters()}
        return [(n, p) for n, p in self.named_parameters() if n not in backbone]

    def instance_parameter_count(self) -> int:
        return sum(p.size for _, p in self.instance_parameters())

    def dfm_attention_flops(self, n_instances: int) -> int:
        """Dense attention FLOPs of every DFM in one denoiser pass with ``n_instances`` boxes."""
        dif = self.config.diffusion
        total = 0
        for block in self.backbone.blocks:
            if block.dfm is not None:
                grid = dif.grid >> block.level
                total += attention_flops(grid * grid, n_instances * self.config.ide.s, dif.width)
        return total

    def semantic_embeddings(self, inputs: ConditionInputs, t: Timesteps) -> Tensor:
        """Grounded semantic embeddings (1, N, S, C) for a condition at timestep t."""
        e_ase = self.ide(inputs.instance_features, t)
        cond = inputs.condition
        return self.grounding(e_ase, cond.boxes, cond.flags)

    def forward(
        self,
        x_t: Union[Tensor, np.ndarray],
        t: Timesteps,
        inputs: ConditionInputs,
        use_instances: bool = True,
    ) -> Tensor:
        """Predicted noise; with ``use_instances`` false only the global prompt conditions."""
        g_ase = self.semantic_embeddings(inputs, t) if use_instances else None
        return self.backbone(x_t, t, inputs.global_features, g_ase, inputs.masks)


def build_encoder(config: RunConfig, vocab: Optional[TokenVocab] = None) -> TextSimEncoder:
    return TextSimEncoder(config.text_sim, vocab)


def save_model(path: Union[str, Path], model: DeigModel, encoder: TextSimEncoder) -> Path:
    """Parameters plus the architecture config and vocabulary; text_sim weights regenerate from its seed."""
    entries = {
        CONFIG_ENTRY: encode_json_entry(model.config.model_dict()),
        VOCAB_ENTRY: encode_json_entry(encoder.vocab.to_json()),
    }
    entries.update(model.state_dict())
    return save_checkpoint(path, entries)


def differing_keys(expected: Dict[str, Any], found: Dict[str, Any], prefix: str = "") -> List[str]:
    """Dotted keys whose values differ between two nested config dicts."""
    keys: List[str] = []
    for key in sorted(set(expected) | set(found)):
        dotted = f"{prefix}{key}"
        a, b = expected.get(key), found.get(key)
        if isinstance(a, dict) and isinstance(b, dict):
            keys.extend(differing_keys(a, b, f"{dotted}."))
        elif a != b:
            keys.append(dotted)
    return keys


def load_model(
    path: Union[str, Path], config: Optional[RunConfig] = None
) -> Tuple[DeigModel, TextSimEncoder]:
    """
    Rebuild a model from a checkpoint.

    Args:
        path: Checkpoint file
        config: Run config the checkpoint must agree with on every architecture
            key; the run seed is exempt. None takes the embedded config as is.

    Raises:
        CheckpointError: If the file is corrupt, does not match the embedded
            config, or was trained with a different architecture than ``config``
    """
    entries = load_checkpoint(path)
    for required in (CONFIG_ENTRY, VOCAB_ENTRY):
        if required not in entries:
            raise CheckpointError(f"Checkpoint {path} has no {required} entry")
    architecture = decode_json_entry(entries.pop(CONFIG_ENTRY))
    vocab = TokenVocab.from_json(decode_json_entry(entries.pop(VOCAB_ENTRY)))
    base = config.model_dump() if config is not None else {}
    base.update(architecture)
    run_config = build_config(base)
    if config is not None:
        differing = [
            key
            for key in differing_keys(config.model_dict(), run_config.model_dict())
            if key != RUN_SEED_KEY
        ]
        if differing:
            raise CheckpointError(f"Checkpoint {path} was trained with different {', '.join(differing)}")
        run_config = config

    model = DeigModel(run_config)
    model.load_state_dict(entries)
    unexpected = set(entries) - {name for name, _ in model.named_parameters()}
    if unexpected:
        raise CheckpointError(f"Checkpoint has unexpected entries: {sorted(unexpected)[:5]}")
    logger.info(f"Loaded model from {path} ({len(entries)} parameters)")
    return model, build_encoder(run_config, vocab)
