"""Seeded sweeps of the attribute oracle over generated bench scenes."""

from typing import Callable, Dict, List

import numpy as np
import pytest

from deig.config.settings import BenchConfig, EvalConfig
from deig.core.metrics.oracle import OracleJudge, extract_person_colors, oracle_extract_attributes
from deig.core.synth.bench import generate_bench
from deig.core.synth.render import PALETTE_RGB, box_to_pixels, render_scene
from deig.core.synth.scene import COLOR_NAMES, PersonSpec, SceneSpec

RESOLUTION = 64
SWEEP_SCENES = 1000
CORRUPTION_SCENES = 200

Corruption = Callable[[np.ndarray, SceneSpec, np.random.Generator], np.ndarray]


@pytest.fixture(scope="module")
def bench_scenes() -> List[SceneSpec]:
    return generate_bench(2024, SWEEP_SCENES, BenchConfig())


def salt_and_pepper(image: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Set a ``rate`` fraction of pixels to pure black or pure white on every channel."""
    out = image.copy()
    hit = rng.random(image.shape[:2]) < rate
    out[hit] = rng.integers(2, size=int(hit.sum()))[:, None].astype(np.float64)
    return out


def _gaussian_noise(image, scene, rng):
    return np.clip(image + rng.normal(scale=0.03, size=image.shape), 0.0, 1.0)


def _erase_instance(image, scene, rng):
    out = image.copy()
    x0, y0, x1, y1 = box_to_pixels(scene.boxes[int(rng.integers(scene.n))], RESOLUTION)
    out[y0:y1, x0:x1] = 1.0
    return out


CORRUPTIONS: Dict[str, Corruption] = {
    "salt-and-pepper": lambda image, scene, rng: salt_and_pepper(image, 0.3, rng),
    "gaussian-noise": _gaussian_noise,
    "erase-instance": _erase_instance,
}


def _colors_recovered(image: np.ndarray, scene: SceneSpec) -> bool:
    for box, attrs in zip(scene.boxes, scene.attrs):
        if isinstance(attrs, PersonSpec):
            colors = extract_person_colors(image, box)
            if colors is None or any(colors[r.region] != r.color for r in attrs.regions):
                return False
        elif oracle_extract_attributes(image, box).color != attrs.color:
            return False
    return True


def _wrong_color(attrs, rng: np.random.Generator) -> str:
    used = {r.color for r in attrs.regions} if isinstance(attrs, PersonSpec) else {attrs.color}
    return str(rng.choice([c for c in COLOR_NAMES if c not in used]))


def _recolor_some(image: np.ndarray, scene: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    """Flat-fill a random subset of instances with a color none of their attributes name."""
    out = image.copy()
    for box, attrs in zip(scene.boxes, scene.attrs):
        if rng.random() < 0.5:
            x0, y0, x1, y1 = box_to_pixels(box, RESOLUTION)
            out[y0:y1, x0:x1] = PALETTE_RGB[_wrong_color(attrs, rng)]
    return out


def _correct_count(judge: OracleJudge, image: np.ndarray, scene: SceneSpec) -> int:
    verdicts = [judge.judge(image, box, attrs) for box, attrs in zip(scene.boxes, scene.attrs)]
    return sum(1 for v in verdicts if v.correct)


@pytest.mark.unit
class TestOracleSweeps:
    def test_ground_truth_renders_round_trip(self, bench_scenes):
        # Arrange
        judge = OracleJudge(EvalConfig())

        # Act
        failures = []
        for scene in bench_scenes:
            image = render_scene(scene, RESOLUTION)
            for i, (box, attrs) in enumerate(zip(scene.boxes, scene.attrs)):
                verdict = judge.judge(image, box, attrs)
                if verdict.correct is not True:
                    failures.append((scene.index, i, verdict.predicted))

        # Assert
        assert failures == []

    def test_colors_survive_salt_and_pepper(self, bench_scenes):
        # Arrange
        rng = np.random.default_rng(11)

        # Act
        recovered = [
            _colors_recovered(salt_and_pepper(render_scene(scene, RESOLUTION), 0.5, rng), scene)
            for scene in bench_scenes
        ]

        # Assert
        assert np.mean(recovered) >= 0.95

    def test_salt_and_pepper_hits_the_requested_fraction(self):
        image = np.full((64, 64, 3), 0.5)

        noisy = salt_and_pepper(image, 0.5, np.random.default_rng(0))

        hit = np.all(noisy != 0.5, axis=-1)
        assert 0.45 < hit.mean() < 0.55
        assert set(np.unique(noisy[hit])) <= {0.0, 1.0}

    @pytest.mark.parametrize("name", list(CORRUPTIONS))
    def test_corruption_never_raises_correct_count(self, bench_scenes, name):
        # Arrange
        judge = OracleJudge(EvalConfig())
        corrupt = CORRUPTIONS[name]
        rng = np.random.default_rng(5)

        # Act
        before, after, raised = 0, 0, []
        for scene in bench_scenes[:CORRUPTION_SCENES]:
            image = _recolor_some(render_scene(scene, RESOLUTION), scene, rng)
            clean = _correct_count(judge, image, scene)
            corrupted = _correct_count(judge, corrupt(image, scene, rng), scene)
            before += clean
            after += corrupted
            if corrupted > clean:
                raised.append(scene.index)

        # Assert
        assert raised == []
        assert after <= before
