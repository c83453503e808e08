import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Union

import numpy as np

from deig.api.schemas.scene import BenchManifest, ManifestEntry
from deig.config.settings import RunConfig
from deig.core.commons.errors import ContractViolation, UsageError
from deig.core.commons.logger import get_logger, log_execution, progress_bar
from deig.core.synth.bench import check_scene, generate_scene
from deig.core.synth.io import read_ppm, read_scene_file, scene_from_file, write_ppm, write_scene
from deig.core.synth.render import render_scene
from deig.core.synth.scene import SceneSpec

logger = get_logger(__name__)

MANIFEST_FILE = "manifest.json"
SCENES_DIR = "scenes"
IMAGES_DIR = "images"


def scene_name(index: int) -> str:
    return f"scene_{index:04d}"


class BenchService:
    """Generates, writes and reloads synthetic benchmark sets."""

    def __init__(self, config: RunConfig):
        """
        Args:
            config: Run configuration; the bench section drives generation
        """
        self.config = config

    def generate(self, seed: int, count: int, start: int = 0, jobs: int = 1) -> List[SceneSpec]:
        """
        Generate scenes start..start+count-1; scene i depends only on (seed, i).

        Raises:
            BenchGenerationError: If a layout exhausts its retry budget
        """
        grid = self.config.diffusion.grid
        bench = self.config.bench

        def build(index: int) -> SceneSpec:
            scene = generate_scene(seed, index, bench, grid)
            check_scene(scene, bench)
            return scene

        indices = range(start, start + count)
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(build, indices))
        return [build(i) for i in indices]

    @log_execution(logger)
    def write(self, scenes: List[SceneSpec], out_dir: Union[str, Path], seed: int) -> BenchManifest:
        """Write scene JSON, ground-truth rasters and a manifest under ``out_dir``."""
        out_dir = Path(out_dir)
        resolution = self.config.diffusion.resolution
        entries = []
        counts = {}
        with progress_bar() as progress:
            task = progress.add_task("writing scenes", total=len(scenes))
            for scene in scenes:
                name = scene_name(scene.index)
                write_scene(out_dir / SCENES_DIR / f"{name}.json", scene)
                write_ppm(out_dir / IMAGES_DIR / f"{name}.ppm", render_scene(scene, resolution))
                entries.append(
                    ManifestEntry(
                        index=scene.index,
                        scene=f"{SCENES_DIR}/{name}.json",
                        image=f"{IMAGES_DIR}/{name}.ppm",
                        level=scene.level.value,
                        n_instances=scene.n,
                    )
                )
                counts[scene.level.value] = counts.get(scene.level.value, 0) + 1
                progress.advance(task)
        manifest = BenchManifest(
            seed=seed, count=len(scenes), mode=self.config.bench.mode, level_counts=counts, scenes=entries
        )
        (out_dir / MANIFEST_FILE).write_text(json.dumps(manifest.model_dump(), indent=2) + "\n")
        logger.info(f"Wrote {len(scenes)} scenes to {out_dir} (levels: {counts})")
        return manifest


def load_scenes(scenes_dir: Union[str, Path]) -> List[SceneSpec]:
    """
    Load every scene JSON of a directory (or of its ``scenes/`` sub-directory) in file-name order.

    Raises:
        UsageError: If the directory holds no scene files
    """
    scenes_dir = Path(scenes_dir)
    if (scenes_dir / SCENES_DIR).is_dir():
        scenes_dir = scenes_dir / SCENES_DIR
    files = sorted(scenes_dir.glob("*.json")) if scenes_dir.is_dir() else []
    if not files:
        raise UsageError(f"No scene files found in {scenes_dir}")
    return [scene_from_file(read_scene_file(path)) for path in files]


def load_images(images_dir: Union[str, Path], scenes: List[SceneSpec]) -> List[np.ndarray]:
    """
    Load one raster per scene, named after the scene index.

    Raises:
        UsageError: If an image is missing
        ContractViolation: If an image has the wrong shape
    """
    images_dir = Path(images_dir)
    images = []
    for scene in scenes:
        image = read_ppm(images_dir / f"{scene_name(scene.index)}.ppm")
        if image.ndim != 3 or image.shape[2] != 3:
            raise ContractViolation(f"Image for scene {scene.index} has shape {image.shape}")
        images.append(image)
    return images

