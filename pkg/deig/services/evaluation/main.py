import csv
import json
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from deig.api.schemas.report import EvalReport
from deig.config.settings import EvalConfig
from deig.core.commons.logger import get_logger, log_execution
from deig.core.metrics.scores import evaluate
from deig.core.synth.scene import SceneSpec
from deig.services.bench.main import load_images, load_scenes

logger = get_logger(__name__)


def headline_maa(report: EvalReport) -> Optional[float]:
    """Scene-count weighted MAA over every level present."""
    weighted, weight = 0.0, 0
    for table in (report.maa_human, report.maa_obj):
        for level, score in table.items():
            count = report.scene_counts.get(level, 0)
            if level != "average" and score is not None and count:
                weighted += score * count
                weight += count
    return weighted / weight if weight else None


def scene_rows(report: EvalReport) -> List[List[str]]:
    """One row per instance: scene, level, instance, correct, unevaluable, iou, leaked."""

    def fmt(value):
        return "" if value is None else str(value).lower()

    rows = [["scene", "level", "instance", "correct", "unevaluable", "iou", "leaked"]]
    for scene in report.scenes:
        for inst in scene.instances:
            rows.append(
                [
                    str(scene.index),
                    scene.level,
                    str(inst.index),
                    fmt(inst.correct),
                    fmt(inst.unevaluable),
                    f"{inst.iou:.6f}",
                    fmt(inst.leaked),
                ]
            )
    return rows


def write_report(
    report: EvalReport, path: Union[str, Path], csv_path: Optional[Union[str, Path]] = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.model_dump(), indent=2) + "\n")
    if csv_path is not None:
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as handle:
            csv.writer(handle).writerows(scene_rows(report))
    return path


class EvaluationService:
    """Scores generated images against ground-truth scenes with the oracle."""

    def __init__(self, config: Optional[EvalConfig] = None, jobs: int = 1):
        self.config = config or EvalConfig()
        self.jobs = jobs

    @log_execution(logger)
    def evaluate(self, scenes: Sequence[SceneSpec], images: Sequence[np.ndarray]) -> EvalReport:
        report = evaluate(scenes, images, self.config, self.jobs)
        logger.info(
            f"Evaluated {report.n_scenes} scenes: MAA human={report.maa_human['average']} "
            f"object={report.maa_obj['average']} mIoU={report.miou:.3f} leakage={report.leakage:.3f}"
        )
        return report

    def evaluate_dirs(self, scenes_dir: Union[str, Path], images_dir: Union[str, Path]) -> EvalReport:
        """
        Raises:
            UsageError: If scene files or images are missing
        """
        scenes = load_scenes(scenes_dir)
        return self.evaluate(scenes, load_images(images_dir, scenes))
