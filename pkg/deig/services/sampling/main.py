from typing import List, Sequence

import numpy as np

from deig.core.commons.logger import get_logger, log_execution, progress_bar
from deig.core.commons.utils import make_rng
from deig.core.condition import GenerationCondition
from deig.core.synth.latent import LatentCodec
from deig.core.tensor import no_grad
from deig.core.text.encoder import TextSimEncoder
from deig.models.deig_model import DeigModel, prepare_condition

logger = get_logger(__name__)


class SamplingService:
    """Ancestral DDPM sampling from a trained model."""

    def __init__(self, model: DeigModel, encoder: TextSimEncoder):
        self.model = model
        self.encoder = encoder
        diffusion = model.config.diffusion
        self.codec = LatentCodec(diffusion.resolution, diffusion.grid)

    def sample_latent(self, cond: GenerationCondition, seed: int, progress: bool = False) -> np.ndarray:
        """
        Run the reverse process from pure noise.

        Args:
            cond: Generation condition
            seed: Seed of the initial noise and every step's noise
            progress: Show a progress bar

        Returns:
            Model-space latent (grid, grid, channels)

        Raises:
            ContractViolation: If the condition exceeds the instance capacity
        """
        inputs = prepare_condition(cond, self.encoder, self.model.config)
        schedule = self.model.schedule
        rng = make_rng(seed, "sample")
        shape = (1, self.codec.grid, self.codec.grid, self.codec.channels)
        x = rng.normal(size=shape)
        with no_grad(), progress_bar(disable=not progress) as bar:
            task = bar.add_task("sampling", total=schedule.t_max)
            for t in reversed(range(schedule.t_max)):
                eps_hat = self.model(x, [t], inputs).data
                x = schedule.step(x, t, eps_hat, rng.normal(size=shape))
                bar.advance(task)
        return x[0]

    def sample(self, cond: GenerationCondition, seed: int, progress: bool = False) -> np.ndarray:
        """(resolution, resolution, 3) raster in [0, 1]."""
        latent = self.sample_latent(cond, seed, progress)
        return np.clip(self.codec.from_model(latent), 0.0, 1.0)

    @log_execution(logger)
    def sample_many(self, conds: Sequence[GenerationCondition], seeds: Sequence[int]) -> List[np.ndarray]:
        images = []
        with progress_bar() as progress:
            task = progress.add_task("sampling scenes", total=len(conds))
            for cond, seed in zip(conds, seeds):
                images.append(self.sample(cond, seed))
                progress.advance(task)
        return images
