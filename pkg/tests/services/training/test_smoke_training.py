import numpy as np
import pytest

from deig.config.constants import CONFIGS_PATH
from deig.config.settings import load_config
from deig.core.commons.utils import derive_seed
from deig.core.metrics.oracle import OracleJudge
from deig.services.bench.main import BenchService
from deig.services.sampling.main import SamplingService
from deig.services.training.main import TrainingService

EARLY_STEPS = 200
SMOOTHING_WINDOW = 20
# a window mean may sit this far above the best earlier one before it counts as a rise
WINDOW_SLACK = 0.1
MIN_LAYOUT_PASS_RATE = 0.9


@pytest.fixture(scope="module")
def smoke_config(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    return load_config(CONFIGS_PATH / "smoke.json").model_copy(update={"output_dir": str(out)})


@pytest.fixture(scope="module")
def smoke_result(smoke_config):
    return TrainingService(smoke_config).train()


def window_means(losses, window: int):
    usable = len(losses) // window * window
    return np.asarray(losses[:usable]).reshape(-1, window).mean(axis=1)


@pytest.mark.e2e
@pytest.mark.slow
class TestSmokeTraining:
    def test_first_loss_matches_unit_noise(self, smoke_result):
        assert smoke_result.pretrain_losses[0] == pytest.approx(1.0, abs=0.2)

    def test_early_loss_decreases(self, smoke_result):
        # Arrange
        early = smoke_result.pretrain_losses[:EARLY_STEPS]

        # Act
        means = window_means(early, SMOOTHING_WINDOW)

        # Assert
        assert len(means) == EARLY_STEPS // SMOOTHING_WINDOW
        running_best = np.minimum.accumulate(means)
        rises = [i for i in range(1, len(means)) if means[i] > running_best[i - 1] + WINDOW_SLACK]
        assert rises == [], f"window means {np.round(means, 3).tolist()}"
        assert means[-1] < 0.7 * means[0]

    def test_instance_phase_ends_below_its_start(self, smoke_result):
        means = window_means(smoke_result.losses, SMOOTHING_WINDOW)

        assert means[-1] < means[0]

    def test_two_instance_colors_on_held_out_layouts(self, smoke_config, smoke_result):
        # Arrange
        scenes = BenchService(smoke_config).generate(
            derive_seed(smoke_config.seed, "held_out"), smoke_config.eval.held_out
        )
        sampler = SamplingService(smoke_result.model, smoke_result.encoder)
        judge = OracleJudge(smoke_config.eval)

        # Act
        passed = []
        for scene in scenes:
            image = sampler.sample(scene.condition(), derive_seed(smoke_config.seed, "held_out_sample", scene.index))
            verdicts = [judge.judge(image, box, attrs) for box, attrs in zip(scene.boxes, scene.attrs)]
            passed.append(all(v.correct for v in verdicts))

        # Assert
        assert all(scene.n == 2 for scene in scenes)
        assert np.mean(passed) >= MIN_LAYOUT_PASS_RATE
