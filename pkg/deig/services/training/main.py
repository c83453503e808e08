import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from deig.config.constants import MAX_TERMINAL_ALPHA_BAR
from deig.config.settings import RunConfig
from deig.core.commons.errors import DivergenceError
from deig.core.commons.logger import get_logger, log_execution, progress_bar
from deig.core.commons.utils import derive_seed, make_rng
from deig.core.synth.bench import generate_bench
from deig.core.synth.latent import LatentCodec
from deig.core.synth.render import render_scene
from deig.core.synth.scene import SceneSpec
from deig.core.tensor import Parameter, backward, ops
from deig.core.tensor.optim import SGD, AdamW, Optimizer
from deig.core.text.encoder import TextSimEncoder
from deig.models.deig_model import ConditionInputs, DeigModel, build_encoder, prepare_condition, save_model

logger = get_logger(__name__)

PRETRAIN_LOSS_FILE = "pretrain_loss.csv"
LOSS_FILE = "loss.csv"


@dataclass
class TrainingExample:
    scene: SceneSpec
    inputs: ConditionInputs
    latent: np.ndarray


@dataclass
class TrainResult:
    model: DeigModel
    encoder: TextSimEncoder
    pretrain_losses: List[float] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)


def write_loss_csv(path: Union[str, Path], losses: Sequence[float]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "loss"])
        writer.writerows((step, repr(float(loss))) for step, loss in enumerate(losses))
    return path


class TrainingService:
    """
    Two-phase training on synthetic scenes.

    Phase one fits the backbone on global-prompt conditioning only (DFM gates stay
    closed because the DFMs are bypassed). The backbone is then frozen and phase two
    fits the IDE, grounding fuser and DFMs with the noise-prediction MSE.
    """

    def __init__(self, config: RunConfig, encoder: Optional[TextSimEncoder] = None):
        """
        Initialize the training service.

        Args:
            config: Run configuration
            encoder: Frozen caption encoder (default: built from config.text_sim)
        """
        self.config = config
        self.encoder = encoder or build_encoder(config)
        self.codec = LatentCodec(config.diffusion.resolution, config.diffusion.grid)

    def build_dataset(self) -> List[TrainingExample]:
        """Generate the training scenes and their model-space latents."""
        seed = derive_seed(self.config.seed, "train_data")
        scenes = generate_bench(seed, self.config.train.dataset_size, self.config.bench, self.config.diffusion.grid)
        resolution = self.config.diffusion.resolution
        return [
            TrainingExample(
                scene,
                prepare_condition(scene.condition(), self.encoder, self.config),
                self.codec.to_model(render_scene(scene, resolution)),
            )
            for scene in scenes
        ]

    def make_optimizer(self, params: List[Parameter], lr: float) -> Optimizer:
        train = self.config.train
        if train.optimizer == "sgd":
            return SGD(params, lr, train.warmup_steps)
        return AdamW(params, lr, weight_decay=train.weight_decay, warmup_steps=train.warmup_steps)

    def run_phase(
        self,
        model: DeigModel,
        phase: str,
        params: List[Tuple[str, Parameter]],
        steps: int,
        lr: float,
        examples: List[TrainingExample],
        use_instances: bool,
    ) -> List[float]:
        """
        Optimise ``params`` for ``steps`` steps.

        Each step averages the loss over batch_size * grad_accum scenes drawn with
        replacement, with one fresh timestep and noise draw per scene.

        Raises:
            DivergenceError: If a loss is NaN or infinite
        """
        if steps == 0 or not params:
            return []
        train = self.config.train
        optimizer = self.make_optimizer([p for _, p in params], lr)
        rng = make_rng(self.config.seed, "train", phase)
        micro = train.batch_size * train.grad_accum
        schedule = model.schedule
        losses: List[float] = []

        with progress_bar() as progress:
            task = progress.add_task(phase, total=steps)
            for step in range(steps):
                optimizer.zero_grad()
                total = 0.0
                for _ in range(micro):
                    example = examples[int(rng.integers(len(examples)))]
                    t = int(rng.integers(schedule.t_max))
                    eps = rng.normal(size=example.latent.shape)
                    x_t = schedule.add_noise(example.latent, t, eps)[None]
                    prediction = model(x_t, [t], example.inputs, use_instances=use_instances)
                    loss = ops.mse(prediction, eps[None])
                    value = loss.item()
                    if not np.isfinite(value):
                        raise DivergenceError(f"{phase} loss is {value} at step {step}")
                    backward(ops.mul(loss, 1.0 / micro))
                    total += value
                optimizer.step()
                losses.append(total / micro)
                if step % train.log_every == 0 or step == steps - 1:
                    logger.info(f"{phase} step {step}/{steps} loss={losses[-1]:.5f} lr={optimizer.current_lr:.2e}")
                progress.advance(task)
        return losses

    @log_execution(logger)
    def train(self, out_path: Optional[Union[str, Path]] = None) -> TrainResult:
        """
        Run both phases and optionally write the checkpoint and loss curves.

        Args:
            out_path: Checkpoint path; loss CSVs go next to it

        Returns:
            TrainResult with the trained model and per-step losses
        """
        model = DeigModel(self.config)
        terminal = model.schedule.terminal_alpha_bar
        if terminal > MAX_TERMINAL_ALPHA_BAR:
            logger.warning(
                f"alpha_bar at t_max is {terminal:.3f}: sampling from pure noise starts off the training distribution; "
                "raise diffusion.beta_end or diffusion.t_max"
            )
        examples = self.build_dataset()
        train = self.config.train

        model.set_trainable(False)
        backbone = model.backbone_parameters()
        for _, param in backbone:
            param.requires_grad = True
        pretrain_losses = self.run_phase(
            model, "pretrain", backbone, train.pretrain_steps, train.pretrain_lr, examples, use_instances=False
        )

        for _, param in backbone:
            param.requires_grad = False
            param.zero_grad()
        instance = model.instance_parameters()
        for _, param in instance:
            param.requires_grad = True
        losses = self.run_phase(model, "train", instance, train.steps, train.lr, examples, use_instances=True)

        result = TrainResult(model, self.encoder, pretrain_losses, losses)
        if out_path is not None:
            out_path = Path(out_path)
            save_model(out_path, model, self.encoder)
            write_loss_csv(out_path.parent / PRETRAIN_LOSS_FILE, pretrain_losses)
            write_loss_csv(out_path.parent / LOSS_FILE, losses)
        return result
