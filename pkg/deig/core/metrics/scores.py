"""MAA, mIoU and leakage over scenes and images, assembled into an EvalReport."""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from deig.api.schemas.report import EvalReport, InstanceEval, SceneEval
from deig.config.settings import EvalConfig
from deig.core.commons.errors import ContractViolation
from deig.core.metrics.detector import BACKGROUND_LABEL, LABELS, box_iou, detect_instance, label_pixels
from deig.core.metrics.oracle import OracleJudge
from deig.core.synth.render import box_to_pixels
from deig.core.synth.scene import AttributeSpec, SceneSpec
from deig.types import Level

HUMAN_LEVELS = [Level.C1, Level.C2, Level.C3]
OBJECT_LEVELS = [Level.L1, Level.L2, Level.L3, Level.L4]


def dominant_label(labels: np.ndarray, box) -> str:
    height, width = labels.shape
    x0, y0, x1, y1 = box_to_pixels(box, width, height)
    counts = np.bincount(labels[y0:y1, x0:x1].reshape(-1), minlength=len(LABELS))
    return LABELS[int(counts.argmax())]


def _leakage_flags(scene: SceneSpec, labels: np.ndarray) -> List[Optional[bool]]:
    """Per instance: does its region show a different instance's color."""
    if not all(isinstance(a, AttributeSpec) for a in scene.attrs):
        return [None] * scene.n
    colors = [a.color for a in scene.attrs]
    if scene.n < 2 or len(set(colors)) < 2:
        return [None] * scene.n
    flags: List[Optional[bool]] = []
    for i, box in enumerate(scene.boxes):
        dominant = dominant_label(labels, box)
        others = {c for j, c in enumerate(colors) if j != i and c != colors[i]}
        flags.append(dominant != BACKGROUND_LABEL and dominant in others)
    return flags


def evaluate_scene(
    scene: SceneSpec, image: np.ndarray, config: EvalConfig, judge: Optional[OracleJudge] = None
) -> SceneEval:
    judge = judge or OracleJudge(config)
    labels = label_pixels(image)
    leaks = _leakage_flags(scene, labels)
    records = []
    for i, (box, attrs) in enumerate(zip(scene.boxes, scene.attrs)):
        verdict = judge.judge(image, box, attrs)
        detected = detect_instance(labels, box, attrs, config.dilation_px)
        records.append(
            InstanceEval(
                index=i,
                correct=verdict.correct,
                unevaluable=verdict.unevaluable,
                iou=box_iou(detected, box),
                leaked=leaks[i],
                predicted=verdict.predicted,
            )
        )
    return SceneEval(index=scene.index, level=scene.level.value, instances=records)


def maa_by_level(records: Sequence[SceneEval], levels: Sequence[Level]) -> Dict[str, Optional[float]]:
    """
    Correct / evaluable instances per level, plus the scene-count weighted average.

    Unevaluable instances are excluded from numerator and denominator.
    """
    result: Dict[str, Optional[float]] = {}
    weighted, weight = 0.0, 0
    for level in levels:
        scenes = [r for r in records if r.level == level.value]
        judged = [inst for r in scenes for inst in r.instances if not inst.unevaluable]
        if not judged:
            result[level.value] = None
            continue
        score = sum(1 for inst in judged if inst.correct) / len(judged)
        result[level.value] = score
        weighted += score * len(scenes)
        weight += len(scenes)
    result["average"] = weighted / weight if weight else None
    return result


def compute_maa(records: Sequence[SceneEval]) -> Dict[str, Dict[str, Optional[float]]]:
    return {"human": maa_by_level(records, HUMAN_LEVELS), "object": maa_by_level(records, OBJECT_LEVELS)}


def compute_miou(records: Sequence[SceneEval]) -> float:
    ious = [inst.iou for r in records for inst in r.instances]
    return float(np.mean(ious)) if ious else 0.0


def compute_leakage(records: Sequence[SceneEval]) -> float:
    flags = [inst.leaked for r in records for inst in r.instances if inst.leaked is not None]
    return sum(flags) / len(flags) if flags else 0.0


def build_report(records: Sequence[SceneEval]) -> EvalReport:
    """Aggregate per-scene records; every score recomputes from them."""
    maa = compute_maa(records)
    counts = {level.value: 0 for level in HUMAN_LEVELS + OBJECT_LEVELS}
    for record in records:
        counts[record.level] += 1
    return EvalReport(
        maa_human=maa["human"],
        maa_obj=maa["object"],
        miou=compute_miou(records),
        leakage=compute_leakage(records),
        n_scenes=len(records),
        n_instances=sum(len(r.instances) for r in records),
        n_unevaluable=sum(inst.unevaluable for r in records for inst in r.instances),
        scene_counts=counts,
        scenes=list(records),
    )


def evaluate(
    scenes: Sequence[SceneSpec],
    images: Sequence[np.ndarray],
    config: Optional[EvalConfig] = None,
    jobs: int = 1,
) -> EvalReport:
    """
    Evaluate aligned scenes and images.

    Args:
        scenes: Ground-truth scenes
        images: One (H, W, 3) raster per scene
        config: Oracle settings
        jobs: Worker threads; records are assembled in scene order

    Raises:
        ContractViolation: If scenes and images are not aligned
    """
    if len(scenes) != len(images):
        raise ContractViolation(f"{len(scenes)} scenes but {len(images)} images")
    config = config or EvalConfig()
    judge = OracleJudge(config)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda pair: evaluate_scene(*pair, config, judge), zip(scenes, images)))
    else:
        records = [evaluate_scene(scene, image, config, judge) for scene, image in zip(scenes, images)]
    return build_report(records)
