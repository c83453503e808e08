"""Seeded synthetic benchmark generator.

Scene ``i`` of a run draws from its own stream ``make_rng(seed, "scene", i)``, so
scenes can be generated in any order or in parallel with identical results.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from deig.config.constants import GARMENTS, LEVEL_PROBABILITIES, MATERIALS, OBJECT_NOUNS, PERSON_REGIONS, TEXTURES
from deig.config.settings import BenchConfig
from deig.core.commons.errors import BenchGenerationError, ContractViolation
from deig.core.commons.logger import get_logger
from deig.core.commons.utils import make_rng
from deig.core.condition import BoundingBox
from deig.core.synth.captions import caption_from_attrs, global_prompt
from deig.core.synth.scene import COLOR_NAMES, AttributeSpec, InstanceAttrs, PersonRegion, PersonSpec, SceneSpec
from deig.types import Level, SceneKind

logger = get_logger(__name__)

MIN_SIDE_CELLS = 3
PERSON_LEVELS = [Level.C1, Level.C2, Level.C3]
OBJECT_LEVELS = [Level.L1, Level.L2, Level.L3, Level.L4]

Rect = Tuple[int, int, int, int]  # cell rectangle x0, y0, x1, y1 (half-open)


class LayoutRejected(Exception):
    """One layout draw violated a constraint; retried by tenacity."""

    def __init__(self, constraint: str):
        self.constraint = constraint
        super().__init__(constraint)


def _area_bounds(config: BenchConfig, grid: int) -> Tuple[int, int]:
    total = grid * grid
    return math.ceil(config.area_min * total - 1e-9), math.floor(config.area_max * total + 1e-9)


def _split(rect: Rect, rng: np.random.Generator, min_cells: int) -> Optional[Tuple[Rect, Rect]]:
    """Guillotine split along the longer side, leaving a one-cell gap."""
    x0, y0, x1, y1 = rect
    w, h = x1 - x0, y1 - y0
    horizontal = w >= h if w != h else bool(rng.integers(2))
    length, other = (w, h) if horizontal else (h, w)
    least = max(MIN_SIDE_CELLS, math.ceil(min_cells / other))
    # first part is [0, s), second part is [s + 1, length)
    candidates = [s for s in range(least, length - least) if length - s - 1 >= least]
    if not candidates:
        return None
    s = int(rng.choice(candidates))
    if horizontal:
        return (x0, y0, x0 + s, y1), (x0 + s + 1, y0, x1, y1)
    return (x0, y0, x1, y0 + s), (x0, y0 + s + 1, x1, y1)


def _shrink(rect: Rect, rng: np.random.Generator, min_cells: int, max_cells: int) -> Rect:
    """Random sub-rectangle with area inside the bounds."""
    x0, y0, x1, y1 = rect
    w, h = x1 - x0, y1 - y0
    options = []
    for bw in range(MIN_SIDE_CELLS, w + 1):
        low = max(MIN_SIDE_CELLS, math.ceil(min_cells / bw))
        high = min(h, max_cells // bw)
        if low <= high:
            options.append((bw, low, high))
    if not options:
        raise LayoutRejected("area_min")
    bw, low, high = options[int(rng.integers(len(options)))]
    bh = int(rng.integers(low, high + 1))
    ox = x0 + int(rng.integers(0, w - bw + 1))
    oy = y0 + int(rng.integers(0, h - bh + 1))
    return ox, oy, ox + bw, oy + bh


def sample_layout(
    rng: np.random.Generator, n: int, grid: int, config: BenchConfig
) -> List[BoundingBox]:
    """
    Draw n grid-aligned boxes by guillotine splitting of the canvas.

    Raises:
        LayoutRejected: With the name of the violated constraint
    """
    min_cells, max_cells = _area_bounds(config, grid)
    rects: List[Rect] = [(0, 0, grid, grid)]
    while len(rects) < n:
        areas = np.array([(r[2] - r[0]) * (r[3] - r[1]) for r in rects], dtype=np.float64)
        index = int(rng.choice(len(rects), p=areas / areas.sum()))
        parts = _split(rects[index], rng, min_cells)
        if parts is None:
            raise LayoutRejected("area_min")
        rects[index : index + 1] = list(parts)
    boxes = []
    for rect in rects:
        x0, y0, x1, y1 = _shrink(rect, rng, min_cells, max_cells)
        boxes.append(BoundingBox(x0 / grid, y0 / grid, x1 / grid, y1 / grid))
    validate_layout(boxes, config)
    return boxes


def validate_layout(boxes: Sequence[BoundingBox], config: BenchConfig) -> None:
    for box in boxes:
        if box.area < config.area_min - 1e-9:
            raise LayoutRejected("area_min")
        if box.area > config.area_max + 1e-9:
            raise LayoutRejected("area_max")
    limit = config.max_iou if config.mode == "bench" else 0.0
    for i, a in enumerate(boxes):
        for b in boxes[i + 1 :]:
            if a.iou(b) > limit:
                raise LayoutRejected("max_iou")


def _allowed_levels(config: BenchConfig, kind: SceneKind) -> List[Level]:
    levels = PERSON_LEVELS if kind == SceneKind.PERSON else OBJECT_LEVELS
    if config.levels:
        levels = [lvl for lvl in levels if lvl.value in config.levels]
    return levels


def sample_level(rng: np.random.Generator, config: BenchConfig) -> Level:
    """Objects at 30/25/25/20 over L1..L4, persons uniform over C1..C3."""
    person_levels = _allowed_levels(config, SceneKind.PERSON)
    object_levels = _allowed_levels(config, SceneKind.OBJECT)
    if not person_levels and not object_levels:
        raise ContractViolation(f"bench.levels {config.levels} selects no known level")
    if not person_levels:
        kind = SceneKind.OBJECT
    elif not object_levels:
        kind = SceneKind.PERSON
    else:
        kind = SceneKind.PERSON if rng.random() < config.person_fraction else SceneKind.OBJECT
    if kind == SceneKind.PERSON:
        return person_levels[int(rng.integers(len(person_levels)))]
    weights = np.array([LEVEL_PROBABILITIES[lvl.value] for lvl in object_levels])
    return object_levels[int(rng.choice(len(object_levels), p=weights / weights.sum()))]


def sample_attrs(rng: np.random.Generator, level: Level, n: int) -> List[InstanceAttrs]:
    if level.kind == SceneKind.PERSON:
        count = int(level.value[1])
        people = []
        for _ in range(n):
            regions = sorted(rng.choice(len(PERSON_REGIONS), size=count, replace=False))
            colors = rng.choice(len(COLOR_NAMES), size=count, replace=False)
            people.append(
                PersonSpec(
                    tuple(
                        PersonRegion(
                            PERSON_REGIONS[r],
                            COLOR_NAMES[c],
                            GARMENTS[PERSON_REGIONS[r]][int(rng.integers(3))],
                        )
                        for r, c in zip(regions, colors)
                    )
                )
            )
        return people

    if n > len(COLOR_NAMES):
        raise ContractViolation(f"At most {len(COLOR_NAMES)} distinctly colored objects per scene")
    colors = rng.choice(len(COLOR_NAMES), size=n, replace=False)
    objects = []
    for c in colors:
        material = MATERIALS[int(rng.integers(len(MATERIALS)))] if level in (Level.L2, Level.L4) else None
        texture = TEXTURES[int(rng.integers(len(TEXTURES)))] if level in (Level.L3, Level.L4) else None
        noun = OBJECT_NOUNS[int(rng.integers(len(OBJECT_NOUNS)))]
        objects.append(AttributeSpec(color=COLOR_NAMES[c], noun=noun, material=material, texture=texture))
    return objects


def generate_scene(seed: int, index: int, config: BenchConfig, grid: int = 16) -> SceneSpec:
    """
    Generate scene ``index`` of the run seeded by ``seed``.

    Raises:
        BenchGenerationError: If the layout retry budget is exhausted
    """
    rng = make_rng(seed, "scene", index)
    level = sample_level(rng, config)
    low, high = config.instance_range()
    n = int(rng.integers(low, high + 1))

    retryer = Retrying(
        stop=stop_after_attempt(config.retry_budget),
        retry=retry_if_exception_type(LayoutRejected),
        reraise=True,
    )
    try:
        boxes = retryer(sample_layout, rng, n, grid, config)
    except LayoutRejected as e:
        raise BenchGenerationError(e.constraint, config.retry_budget) from e

    attrs = sample_attrs(rng, level, n)
    captions = tuple(caption_from_attrs(a, coarse=config.coarse_captions) for a in attrs)
    return SceneSpec(
        seed=seed,
        level=level,
        boxes=tuple(boxes),
        attrs=tuple(attrs),
        captions=captions,
        global_prompt=global_prompt(captions),
        index=index,
    )


def generate_bench(
    seed: int, count: int, config: BenchConfig, grid: int = 16, start: int = 0
) -> List[SceneSpec]:
    """Generate ``count`` scenes with indices start..start+count-1."""
    if count < 1:
        raise ContractViolation("generate_bench needs count >= 1")
    return [generate_scene(seed, start + i, config, grid) for i in range(count)]


def check_scene(scene: SceneSpec, config: BenchConfig) -> None:
    """
    Self-validation of a generated scene.

    Raises:
        ContractViolation: If an invariant does not hold
    """
    low, high = config.instance_range()
    if not low <= scene.n <= high:
        raise ContractViolation(f"Scene {scene.index} has {scene.n} instances, expected {low}..{high}")
    try:
        validate_layout(scene.boxes, config)
    except LayoutRejected as e:
        raise ContractViolation(f"Scene {scene.index} violates {e.constraint}")
    expected = tuple(caption_from_attrs(a, coarse=config.coarse_captions) for a in scene.attrs)
    if expected != scene.captions or global_prompt(expected) != scene.global_prompt:
        raise ContractViolation(f"Scene {scene.index} captions do not regenerate from its attributes")
