from unittest.mock import patch

import numpy as np
import pytest

from deig.core.commons.errors import ContractViolation
from deig.core.condition import BoundingBox, GenerationCondition
from deig.models.deig_model import DeigModel, build_encoder
from deig.services.sampling.main import SamplingService


@pytest.mark.unit
@pytest.mark.service
class TestSamplingService:
    """Unit tests for SamplingService with an untrained tiny model."""

    @pytest.fixture
    def service(self, tiny_config):
        model = DeigModel(tiny_config)
        model.backbone.out.weight.data = np.random.default_rng(3).normal(0.0, 0.1, model.backbone.out.weight.shape)
        return SamplingService(model, build_encoder(tiny_config))

    def test_sample_shape_and_range(self, service, tiny_config, two_box_condition):
        image = service.sample(two_box_condition, seed=1)

        resolution = tiny_config.diffusion.resolution
        assert image.shape == (resolution, resolution, 3)
        assert image.min() >= 0.0 and image.max() <= 1.0

    def test_same_seed_same_image(self, service, two_box_condition):
        a = service.sample(two_box_condition, seed=4)
        b = service.sample(two_box_condition, seed=4)

        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self, service, two_box_condition):
        a = service.sample_latent(two_box_condition, seed=4)
        b = service.sample_latent(two_box_condition, seed=5)

        assert not np.allclose(a, b)

    def test_one_model_call_per_timestep(self, service, tiny_config, two_box_condition):
        with patch.object(service.model, "forward", wraps=service.model.forward) as forward:
            service.sample_latent(two_box_condition, seed=0)

        assert forward.call_count == tiny_config.diffusion.t_max
        assert [c.args[1] for c in forward.call_args_list] == [[t] for t in reversed(range(tiny_config.diffusion.t_max))]

    def test_sample_many_keeps_order(self, service, two_box_condition):
        images = service.sample_many([two_box_condition, two_box_condition], [2, 3])

        np.testing.assert_array_equal(images[1], service.sample(two_box_condition, 3))

    def test_over_capacity_condition(self, service, tiny_config):
        box = BoundingBox(0.0, 0.0, 0.1, 0.1)
        cond = GenerationCondition.build("cups", [(box, "a cup")] * (tiny_config.diffusion.max_instances + 1))

        with pytest.raises(ContractViolation):
            service.sample(cond, seed=0)
