"""Linear-beta DDPM noise schedule."""

from typing import Union

import numpy as np

from deig.core.commons.errors import ContractViolation


class NoiseSchedule:
    """
    beta_t linear in [beta_start, beta_end] over t = 0..t_max-1, with
    alpha_t = 1 - beta_t and alpha_bar_t the running product.
    """

    def __init__(self, t_max: int = 200, beta_start: float = 1e-4, beta_end: float = 0.02):
        if t_max < 1:
            raise ContractViolation(f"t_max must be positive, got {t_max}")
        if not 0.0 < beta_start <= beta_end < 1.0:
            raise ContractViolation(f"Need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
        self.t_max = t_max
        self.betas = np.linspace(beta_start, beta_end, t_max)
        self.alphas = 1.0 - self.betas
        self.alpha_bars = np.cumprod(self.alphas)
        previous = np.concatenate([[1.0], self.alpha_bars[:-1]])
        self.posterior_variance = self.betas * (1.0 - previous) / (1.0 - self.alpha_bars)

    @property
    def terminal_alpha_bar(self) -> float:
        """Signal fraction left at the last step; the sampler assumes it is close to 0."""
        return float(self.alpha_bars[-1])

    @classmethod
    def from_config(cls, config) -> "NoiseSchedule":
        return cls(config.t_max, config.beta_start, config.beta_end)

    def check(self, t: Union[int, np.ndarray]) -> np.ndarray:
        steps = np.atleast_1d(np.asarray(t))
        if not np.issubdtype(steps.dtype, np.integer) or np.any(steps < 0) or np.any(steps >= self.t_max):
            raise ContractViolation(f"Timestep must be an integer in [0, {self.t_max}), got {t!r}")
        return steps

    def add_noise(self, x0: np.ndarray, t: Union[int, np.ndarray], eps: np.ndarray) -> np.ndarray:
        """
        x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.

        Args:
            x0: Clean latents (B, ...) or a single latent when t is scalar
            t: Timestep per batch element
            eps: Noise of the same shape as x0
        """
        if np.shape(x0) != np.shape(eps):
            raise ContractViolation(f"x0 {np.shape(x0)} and eps {np.shape(eps)} differ in shape")
        steps = self.check(t)
        ab = self.alpha_bars[steps]
        if np.ndim(t) == 0:
            ab = ab[0]
        else:
            ab = ab.reshape(-1, *([1] * (np.ndim(x0) - 1)))
        return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps

    def step(self, x_t: np.ndarray, t: int, eps_hat: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """One ancestral sampling step x_t -> x_{t-1}; no noise is added at t = 0."""
        self.check(t)
        beta, alpha, ab = self.betas[t], self.alphas[t], self.alpha_bars[t]
        mean = (x_t - beta / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(alpha)
        if t == 0:
            return mean
        return mean + np.sqrt(self.posterior_variance[t]) * noise
