import numpy as np
import pytest

from deig.config.constants import CONFIGS_PATH, MAX_TERMINAL_ALPHA_BAR
from deig.config.settings import load_config
from deig.core.commons.errors import ContractViolation, ShapeMismatchError
from deig.core.tensor import Tensor, backward, ops
from deig.models.diffusion.backbone import Denoiser, merge_tokens, split_tokens
from deig.models.diffusion.schedule import NoiseSchedule


@pytest.mark.unit
@pytest.mark.model
class TestNoiseSchedule:
    def test_alpha_bars_decrease(self):
        schedule = NoiseSchedule(50)

        assert np.all(np.diff(schedule.alpha_bars) < 0)
        assert 0.0 < schedule.alpha_bars[-1] < schedule.alpha_bars[0] < 1.0

    def test_terminal_alpha_bar(self):
        schedule = NoiseSchedule(50)

        assert schedule.terminal_alpha_bar == pytest.approx(float(np.prod(1.0 - schedule.betas)))

    def test_default_betas_leave_signal_at_t_max(self):
        assert NoiseSchedule(200).terminal_alpha_bar > MAX_TERMINAL_ALPHA_BAR

    def test_smoke_schedule_ends_near_pure_noise(self):
        config = load_config(CONFIGS_PATH / "smoke.json")

        schedule = NoiseSchedule.from_config(config.diffusion)

        assert schedule.terminal_alpha_bar < MAX_TERMINAL_ALPHA_BAR

    def test_add_noise_formula(self, rng):
        schedule = NoiseSchedule(20)
        x0 = rng.normal(size=(2, 3))
        eps = rng.normal(size=(2, 3))

        noisy = schedule.add_noise(x0, np.array([0, 19]), eps)

        for row, t in enumerate([0, 19]):
            ab = schedule.alpha_bars[t]
            np.testing.assert_allclose(noisy[row], np.sqrt(ab) * x0[row] + np.sqrt(1.0 - ab) * eps[row])

    def test_scalar_timestep(self, rng):
        schedule = NoiseSchedule(10)
        x0 = rng.normal(size=(4, 4))

        noisy = schedule.add_noise(x0, 3, np.zeros_like(x0))

        np.testing.assert_allclose(noisy, np.sqrt(schedule.alpha_bars[3]) * x0)

    def test_last_step_adds_no_noise(self, rng):
        schedule = NoiseSchedule(10)
        x_t = rng.normal(size=(3,))
        eps_hat = rng.normal(size=(3,))

        quiet = schedule.step(x_t, 0, eps_hat, np.zeros(3))
        noisy = schedule.step(x_t, 0, eps_hat, rng.normal(size=(3,)))

        np.testing.assert_array_equal(quiet, noisy)

    def test_step_inverts_noise_with_true_eps_at_t0(self, rng):
        schedule = NoiseSchedule(10)
        x0 = rng.normal(size=(5,))
        eps = rng.normal(size=(5,))

        recovered = schedule.step(schedule.add_noise(x0, 0, eps), 0, eps, np.zeros(5))

        np.testing.assert_allclose(recovered, x0, atol=1e-12)

    @pytest.mark.parametrize("t", [-1, 10, 2.0, np.array([1, 10])])
    def test_invalid_timesteps(self, t):
        with pytest.raises(ContractViolation):
            NoiseSchedule(10).check(t)

    def test_invalid_betas(self):
        with pytest.raises(ContractViolation):
            NoiseSchedule(10, beta_start=0.1, beta_end=0.01)

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            NoiseSchedule(10).add_noise(np.zeros(3), 1, np.zeros(4))


@pytest.mark.unit
@pytest.mark.model
class TestTokenHierarchy:
    def test_split_inverts_merge(self, rng):
        h = Tensor(rng.normal(size=(2, 16, 3)))

        restored = split_tokens(merge_tokens(h, 4), 4)

        np.testing.assert_array_equal(restored.data, h.data)

    def test_merge_gathers_2x2_cells(self):
        h = Tensor(np.arange(16, dtype=np.float64).reshape(1, 16, 1))

        merged = merge_tokens(h, 4)

        assert merged.shape == (1, 4, 4)
        np.testing.assert_array_equal(merged.data[0, 0], [0, 1, 4, 5])
        np.testing.assert_array_equal(merged.data[0, 3], [10, 11, 14, 15])


@pytest.mark.unit
@pytest.mark.model
class TestDenoiser:
    def _global(self, config, rng):
        return Tensor(rng.normal(size=(1, 3, config.text_sim.channels)))

    def test_fresh_denoiser_predicts_zero(self, tiny_config, rng):
        denoiser = Denoiser(tiny_config, rng)
        dif = tiny_config.diffusion
        x_t = rng.normal(size=(2, dif.grid, dif.grid, dif.latent_channels))

        out = denoiser(x_t, [0, 3], self._global(tiny_config, rng))

        assert out.shape == (2, dif.grid, dif.grid, dif.latent_channels)
        assert np.all(out.data == 0.0)

    def test_gradients_flow_through_both_levels(self, tiny_config, rng):
        denoiser = Denoiser(tiny_config, rng)
        denoiser.out.weight.data = rng.normal(0.0, 0.1, denoiser.out.weight.shape)
        dif = tiny_config.diffusion
        x_t = rng.normal(size=(1, dif.grid, dif.grid, dif.latent_channels))

        loss = ops.mse(denoiser(x_t, 1, self._global(tiny_config, rng)), np.zeros_like(x_t))
        backward(loss)

        assert denoiser.merge.weight.grad is not None
        assert np.any(denoiser.split.weight.grad != 0.0)
        assert np.any(denoiser.patch_embed.weight.grad != 0.0)

    def test_one_dfm_per_enabled_block(self, tiny_config, rng):
        config = tiny_config.with_overrides({"dfm.enabled_blocks": [True, False]})

        denoiser = Denoiser(config, rng)

        assert len(denoiser.dfm_modules()) == 1
        assert denoiser.blocks[1].dfm is None

    def test_wrong_latent_shape(self, tiny_config, rng):
        denoiser = Denoiser(tiny_config, rng)

        with pytest.raises(ShapeMismatchError):
            denoiser(np.zeros((1, 4, 4, 3)), 0, self._global(tiny_config, rng))
