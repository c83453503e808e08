import numpy as np
import pytest

from deig.config.settings import BenchConfig, EvalConfig
from deig.core.commons.errors import ContractViolation
from deig.core.condition import BoundingBox
from deig.core.metrics.detector import detect_instance, label_pixels
from deig.core.metrics.oracle import OracleJudge, color_vote, oracle_extract_attributes
from deig.core.metrics.scores import build_report, evaluate, evaluate_scene
from deig.core.synth.bench import generate_bench
from deig.core.synth.render import BACKGROUND, PALETTE_RGB, box_to_pixels, render_scene
from deig.core.synth.scene import AttributeSpec, SceneSpec
from deig.types import Level


def _two_object_scene() -> SceneSpec:
    return SceneSpec(
        seed=0,
        level=Level.L1,
        boxes=(BoundingBox(0.0, 0.0, 0.5, 0.5), BoundingBox(0.5, 0.5, 1.0, 1.0)),
        attrs=(AttributeSpec("red", "cup"), AttributeSpec("blue", "vase")),
        captions=("a red cup", "a blue vase"),
        global_prompt="a red cup, a blue vase",
    )


@pytest.mark.unit
class TestOracle:
    @pytest.mark.parametrize(
        "attrs",
        [
            AttributeSpec("green", "bottle", material="plastic"),
            AttributeSpec("yellow", "pillow", texture="polka-dotted"),
            AttributeSpec("purple", "bag", material="leather", texture="plaid"),
            AttributeSpec("white", "box", material="glass", texture="striped"),
            AttributeSpec("black", "lamp", material="rubber", texture="floral"),
        ],
    )
    def test_recovers_rendered_attributes(self, attrs):
        # Arrange
        scene = SceneSpec(0, attrs.level, (BoundingBox(0.125, 0.125, 0.625, 0.75),), (attrs,), ("c",), "c")
        image = render_scene(scene, 64)

        # Act
        estimate = oracle_extract_attributes(image, scene.boxes[0])

        # Assert
        assert (estimate.color, estimate.material, estimate.texture) == (attrs.color, attrs.material, attrs.texture)

    def test_tiny_box_is_unevaluable(self):
        image = np.broadcast_to(BACKGROUND, (64, 64, 3)).copy()

        estimate = oracle_extract_attributes(image, BoundingBox(0.0, 0.0, 0.03, 0.03))

        assert estimate.unevaluable

    def test_saturated_pixels_do_not_vote(self):
        pixels = np.zeros((10, 3))
        pixels[:3] = PALETTE_RGB["cyan"]

        assert color_vote(pixels)[0] == "cyan"
        assert color_vote(np.ones((4, 3)))[0] is None

    def test_judge_reports_wrong_color(self):
        scene = _two_object_scene()
        image = render_scene(scene, 32)
        x0, y0, x1, y1 = box_to_pixels(scene.boxes[0], 32)
        image[y0:y1, x0:x1] = PALETTE_RGB["green"]

        verdict = OracleJudge().judge(image, scene.boxes[0], scene.attrs[0])

        assert verdict.correct is False
        assert verdict.predicted["color"] == "green"


@pytest.mark.unit
class TestDetector:
    def test_detects_rendered_box(self):
        scene = _two_object_scene()
        labels = label_pixels(render_scene(scene, 32))

        detected = detect_instance(labels, scene.boxes[1], scene.attrs[1], dilation_px=2)

        assert detected == scene.boxes[1]

    def test_missing_instance(self):
        labels = label_pixels(np.broadcast_to(BACKGROUND, (32, 32, 3)).copy())

        assert detect_instance(labels, BoundingBox(0.0, 0.0, 0.5, 0.5), AttributeSpec("red", "cup")) is None


@pytest.mark.unit
class TestScores:
    def test_ground_truth_renders_score_perfectly(self):
        # Arrange
        scenes = generate_bench(17, 12, BenchConfig())
        images = [render_scene(scene, 64) for scene in scenes]

        # Act
        report = evaluate(scenes, images, EvalConfig())

        # Assert
        assert report.maa_obj["average"] in (None, 1.0)
        assert report.maa_human["average"] in (None, 1.0)
        assert report.maa_obj["average"] is not None or report.maa_human["average"] is not None
        assert report.leakage == 0.0
        assert report.miou > 0.9
        assert report.n_scenes == 12

    def test_parallel_evaluation_matches_serial(self):
        scenes = generate_bench(3, 4, BenchConfig())
        images = [render_scene(scene, 64) for scene in scenes]

        serial = evaluate(scenes, images, EvalConfig(), jobs=1)
        parallel = evaluate(scenes, images, EvalConfig(), jobs=3)

        assert serial.model_dump() == parallel.model_dump()

    def test_swapped_color_counts_as_leakage(self):
        # Arrange
        scene = _two_object_scene()
        image = render_scene(scene, 32)
        x0, y0, x1, y1 = box_to_pixels(scene.boxes[0], 32)
        image[y0:y1, x0:x1] = PALETTE_RGB["blue"]

        # Act
        report = build_report([evaluate_scene(scene, image, EvalConfig(min_pixels=4))])

        # Assert
        assert report.scenes[0].instances[0].leaked is True
        assert report.scenes[0].instances[1].leaked is False
        assert report.leakage == pytest.approx(0.5)
        assert report.maa_obj["L1"] == pytest.approx(0.5)

    def test_levels_without_scenes_are_none(self):
        scene = _two_object_scene()

        report = build_report([evaluate_scene(scene, render_scene(scene, 32), EvalConfig())])

        assert report.maa_obj["L1"] == 1.0
        assert report.maa_obj["L4"] is None
        assert report.maa_human["average"] is None
        assert report.scene_counts["L1"] == 1

    def test_misaligned_inputs(self):
        with pytest.raises(ContractViolation):
            evaluate([_two_object_scene()], [])
