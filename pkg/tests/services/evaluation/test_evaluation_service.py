import csv
import json

import pytest

from deig.api.schemas.report import EvalReport, InstanceEval, SceneEval
from deig.config.settings import BenchConfig, EvalConfig
from deig.core.commons.errors import UsageError
from deig.core.synth.bench import generate_bench
from deig.core.synth.io import write_scene
from deig.core.synth.render import render_scene
from deig.services.bench.main import BenchService
from deig.services.evaluation.main import EvaluationService, headline_maa, scene_rows, write_report


def _report(maa_obj, maa_human, counts) -> EvalReport:
    return EvalReport(
        maa_human=maa_human,
        maa_obj=maa_obj,
        miou=0.5,
        leakage=0.0,
        n_scenes=sum(counts.values()),
        n_instances=0,
        n_unevaluable=0,
        scene_counts=counts,
        scenes=[],
    )


@pytest.mark.unit
class TestHeadlineMaa:
    def test_weights_levels_by_scene_count(self):
        report = _report({"L1": 1.0, "L2": 0.0, "average": 0.5}, {"C1": 0.5, "average": 0.5}, {"L1": 3, "L2": 1, "C1": 4})

        assert headline_maa(report) == pytest.approx((3 * 1.0 + 0 + 4 * 0.5) / 8)

    def test_unscored_levels_are_skipped(self):
        report = _report({"L1": None, "L2": 0.25, "average": 0.25}, {"C1": None, "average": None}, {"L2": 2})

        assert headline_maa(report) == pytest.approx(0.25)

    def test_nothing_scored(self):
        assert headline_maa(_report({"average": None}, {"average": None}, {})) is None


@pytest.mark.unit
@pytest.mark.service
class TestEvaluationService:
    def test_ground_truth_directories(self, tiny_config, tmp_path):
        # Arrange
        bench = BenchService(tiny_config.with_overrides({"diffusion.resolution": 64, "diffusion.grid": 16}))
        scenes = bench.generate(2, 3)
        bench.write(scenes, tmp_path, seed=2)

        # Act
        report = EvaluationService(EvalConfig(min_pixels=4)).evaluate_dirs(tmp_path, tmp_path / "images")

        # Assert
        assert report.n_scenes == 3
        assert report.leakage == 0.0
        assert headline_maa(report) in (None, 1.0)

    def test_missing_images(self, tmp_path):
        scenes = generate_bench(1, 1, BenchConfig())
        write_scene(tmp_path / "scenes" / "scene_0000.json", scenes[0])

        with pytest.raises(UsageError):
            EvaluationService().evaluate_dirs(tmp_path, tmp_path / "images")

    def test_write_report_json_and_csv(self, tmp_path):
        # Arrange
        scenes = generate_bench(4, 2, BenchConfig(person_fraction=0.0))
        images = [render_scene(scene, 64) for scene in scenes]
        report = EvaluationService(jobs=2).evaluate(scenes, images)

        # Act
        write_report(report, tmp_path / "eval.json", tmp_path / "eval.csv")

        # Assert
        assert EvalReport.model_validate(json.loads((tmp_path / "eval.json").read_text())) == report
        with (tmp_path / "eval.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["scene", "level", "instance", "correct", "unevaluable", "iou", "leaked"]
        assert len(rows) == 1 + sum(scene.n for scene in scenes)

    def test_scene_rows_format_optional_values(self):
        report = _report({"average": None}, {"average": None}, {})
        report.scenes.append(
            SceneEval(index=3, level="L2", instances=[InstanceEval(index=0, unevaluable=True, iou=0.25)])
        )

        assert scene_rows(report)[1] == ["3", "L2", "0", "", "true", "0.250000", ""]
