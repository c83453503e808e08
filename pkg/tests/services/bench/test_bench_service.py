import json

import numpy as np
import pytest

from deig.core.commons.errors import UsageError
from deig.core.synth.render import render_scene, to_uint8
from deig.services.bench.main import BenchService, load_images, load_scenes, scene_name


@pytest.mark.unit
@pytest.mark.service
class TestBenchService:
    """Unit tests for BenchService."""

    @pytest.fixture
    def service(self, tiny_config):
        return BenchService(tiny_config)

    def test_generate_is_deterministic(self, service):
        assert service.generate(5, 3) == service.generate(5, 3)

    def test_parallel_generation_matches_serial(self, service):
        assert service.generate(5, 4, jobs=3) == service.generate(5, 4)

    def test_start_offsets_indices(self, service):
        scenes = service.generate(5, 2, start=3)

        assert [scene.index for scene in scenes] == [3, 4]
        assert scenes[0] == service.generate(5, 4)[3]

    def test_write_and_reload(self, service, tiny_config, tmp_path):
        # Arrange
        scenes = service.generate(9, 3)

        # Act
        manifest = service.write(scenes, tmp_path, seed=9)
        reloaded = load_scenes(tmp_path)
        images = load_images(tmp_path / "images", reloaded)

        # Assert
        assert reloaded == scenes
        assert manifest.count == 3
        assert sum(manifest.level_counts.values()) == 3
        assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 9
        expected = render_scene(scenes[1], tiny_config.diffusion.resolution)
        np.testing.assert_array_equal(to_uint8(images[1]), to_uint8(expected))

    def test_scene_names_are_zero_padded(self):
        assert scene_name(7) == "scene_0007"

    def test_empty_directory(self, tmp_path):
        with pytest.raises(UsageError):
            load_scenes(tmp_path)

    def test_missing_image(self, service, tmp_path):
        scenes = service.generate(1, 1)

        with pytest.raises(UsageError):
            load_images(tmp_path, scenes)
