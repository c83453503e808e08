from unittest.mock import patch

import numpy as np
import pytest

from deig.config.constants import LEVEL_PROBABILITIES
from deig.config.settings import BenchConfig
from deig.core.commons.errors import BenchGenerationError, ContractViolation
from deig.core.synth import bench as bench_module
from deig.core.synth.bench import check_scene, generate_bench, generate_scene, sample_level
from deig.core.synth.captions import caption_from_attrs, global_prompt, parse_caption
from deig.core.synth.scene import AttributeSpec, PersonRegion, PersonSpec
from deig.types import Level, SceneKind


@pytest.mark.unit
class TestGenerateScene:
    def test_same_seed_same_scene(self):
        config = BenchConfig()

        assert generate_scene(11, 3, config) == generate_scene(11, 3, config)

    def test_scene_depends_only_on_its_index(self):
        config = BenchConfig()

        batch = generate_bench(11, 4, config)

        assert batch[2] == generate_scene(11, 2, config)
        assert [scene.index for scene in batch] == [0, 1, 2, 3]

    def test_bench_constraints_hold(self):
        config = BenchConfig()

        for scene in generate_bench(5, 20, config):
            check_scene(scene, config)
            assert 3 <= scene.n <= 6
            assert all(0.10 - 1e-9 <= box.area <= 0.60 + 1e-9 for box in scene.boxes)
            for i, a in enumerate(scene.boxes):
                for b in scene.boxes[i + 1 :]:
                    assert a.iou(b) <= 0.05

    def test_train_mode_boxes_are_disjoint(self):
        config = BenchConfig(mode="train")

        for scene in generate_bench(5, 20, config):
            assert 1 <= scene.n <= 2
            if scene.n == 2:
                assert scene.boxes[0].intersection(scene.boxes[1]) == 0.0

    def test_object_scenes_have_distinct_colors(self):
        config = BenchConfig(person_fraction=0.0)

        for scene in generate_bench(8, 10, config):
            colors = [a.color for a in scene.attrs]
            assert scene.kind == SceneKind.OBJECT
            assert len(set(colors)) == len(colors)

    def test_level_filter(self):
        config = BenchConfig(levels=["L3"])

        assert {scene.level for scene in generate_bench(2, 6, config)} == {Level.L3}

    def test_person_scenes(self):
        config = BenchConfig(person_fraction=1.0)

        scene = generate_scene(3, 0, config)

        assert scene.kind == SceneKind.PERSON
        assert all(len(a.regions) == int(scene.level.value[1]) for a in scene.attrs)

    def test_captions_match_attributes(self):
        scene = generate_scene(21, 0, BenchConfig())

        assert scene.captions == tuple(caption_from_attrs(a) for a in scene.attrs)
        assert scene.global_prompt == ", ".join(scene.captions)

    def test_exhausted_retry_budget(self):
        config = BenchConfig(retry_budget=3)

        with patch.object(bench_module, "validate_layout", side_effect=bench_module.LayoutRejected("max_iou")):
            with pytest.raises(BenchGenerationError, match="max_iou") as excinfo:
                generate_scene(1, 0, config)

        assert excinfo.value.attempts == 3

    def test_count_must_be_positive(self):
        with pytest.raises(ContractViolation):
            generate_bench(0, 0, BenchConfig())

    def test_check_scene_rejects_wrong_instance_count(self):
        scene = generate_scene(4, 0, BenchConfig(mode="train"))

        with pytest.raises(ContractViolation):
            check_scene(scene, BenchConfig(min_instances=5, max_instances=6))


@pytest.mark.unit
class TestCaptions:
    @pytest.mark.parametrize(
        "attrs, caption",
        [
            (AttributeSpec("green", "bottle", material="plastic"), "a green plastic bottle"),
            (AttributeSpec("red", "pillow", material="fabric", texture="striped"), "a red striped fabric pillow"),
            (AttributeSpec("blue", "cup"), "a blue cup"),
            (
                PersonSpec((PersonRegion("hat", "red", "hat"), PersonRegion("lower", "blue", "pants"))),
                "a person wearing a red hat and blue pants",
            ),
        ],
    )
    def test_caption_realisation_and_parse(self, attrs, caption):
        assert caption_from_attrs(attrs) == caption
        assert parse_caption(caption) == attrs

    def test_coarse_caption(self):
        attrs = AttributeSpec("red", "pillow", material="fabric", texture="striped")

        assert caption_from_attrs(attrs, coarse=True) == "a red pillow"

    def test_global_prompt_joins_with_commas(self):
        assert global_prompt(["a red cup", "a blue vase"]) == "a red cup, a blue vase"

    def test_unparseable_caption(self):
        with pytest.raises(ContractViolation):
            parse_caption("two dogs playing")

    def test_unknown_attribute(self):
        with pytest.raises(ContractViolation):
            AttributeSpec("mauve", "cup")


@pytest.mark.unit
def test_object_level_composition():
    # Arrange
    rng = np.random.default_rng(0)
    config = BenchConfig(person_fraction=0.0)
    n = 10000

    # Act
    draws = [sample_level(rng, config).value for _ in range(n)]

    # Assert
    for level, p in LEVEL_PROBABILITIES.items():
        sigma = np.sqrt(n * p * (1.0 - p))
        assert abs(draws.count(level) - n * p) <= 3 * sigma, level
