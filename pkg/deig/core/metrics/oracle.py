"""Programmatic attribute judge over rendered or sampled rasters."""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from deig.config.constants import MATERIAL_BLEND_STEP, MATERIALS, TEXTURES
from deig.config.settings import EvalConfig
from deig.core.condition import BoundingBox
from deig.core.interfaces.attribute_judge import AttributeJudge
from deig.core.synth.render import (
    LUMA_WEIGHTS,
    MATERIAL_TARGET,
    PALETTE_RGB,
    box_to_pixels,
    interior_mask,
    material_lattice,
    person_region_rows,
    texture_mask,
)
from deig.core.synth.scene import AttributeSpec, InstanceAttrs, PersonSpec

_PALETTE_NAMES = list(PALETTE_RGB)
_PALETTE_MATRIX = np.stack([PALETTE_RGB[name] for name in _PALETTE_NAMES])


@dataclass
class AttributeEstimate:
    color: Optional[str] = None
    material: Optional[str] = None
    texture: Optional[str] = None
    confidence: Dict[str, float] = field(default_factory=dict)
    unevaluable: bool = False


@dataclass
class Judgement:
    correct: Optional[bool]
    predicted: Dict[str, Optional[str]]
    unevaluable: bool = False


def saturated(pixels: np.ndarray) -> np.ndarray:
    """Pixels whose channels are all exactly 0 or all exactly 1."""
    return np.all(pixels <= 0.0, axis=-1) | np.all(pixels >= 1.0, axis=-1)


def nearest_palette(pixels: np.ndarray) -> np.ndarray:
    """Index into the palette of the nearest color for each pixel of (..., 3)."""
    d = ((pixels[..., None, :] - _PALETTE_MATRIX) ** 2).sum(axis=-1)
    return d.argmin(axis=-1)


def color_vote(pixels: np.ndarray) -> "tuple[Optional[str], float]":
    """Plurality nearest-palette color after rejecting saturated pixels."""
    pixels = pixels.reshape(-1, 3)
    pixels = pixels[~saturated(pixels)]
    if pixels.size == 0:
        return None, 0.0
    counts = np.bincount(nearest_palette(pixels), minlength=len(_PALETTE_NAMES))
    best = int(counts.argmax())
    return _PALETTE_NAMES[best], float(counts[best] / counts.sum())


def _texture(crop: np.ndarray, valid: np.ndarray, threshold: float) -> "tuple[Optional[str], float]":
    h, w = valid.shape
    luma = crop @ LUMA_WEIGHTS
    candidates = valid & interior_mask(h, w) & ~material_lattice(h, w)
    best, best_contrast = None, 0.0
    for name in TEXTURES:
        pattern = texture_mask(name, h, w) & candidates
        rest = candidates & ~pattern
        if not pattern.any() or not rest.any():
            continue
        contrast = abs(float(luma[pattern].mean() - luma[rest].mean()))
        if contrast > best_contrast:
            best, best_contrast = name, contrast
    if best_contrast < threshold:
        return None, best_contrast
    return best, best_contrast


def _material(crop: np.ndarray, valid: np.ndarray, color: str) -> "tuple[Optional[str], float]":
    h, w = valid.shape
    lattice = material_lattice(h, w) & valid
    if not lattice.any():
        return None, 0.0
    base = PALETTE_RGB[color]
    direction = MATERIAL_TARGET - base
    alphas = (crop[lattice] - base) @ direction / float(direction @ direction)
    alpha = float(np.median(alphas))
    level = int(round(alpha / MATERIAL_BLEND_STEP)) - 1
    if level < 0:
        return None, alpha
    return MATERIALS[min(level, len(MATERIALS) - 1)], alpha


def oracle_extract_attributes(
    image: np.ndarray,
    box: BoundingBox,
    min_pixels: int = 16,
    texture_threshold: float = 0.1,
) -> AttributeEstimate:
    """
    Estimate object attributes inside a box.

    Args:
        image: (H, W, 3) raster in [0, 1]
        box: Instance box
        min_pixels: Boxes covering fewer pixels are unevaluable
        texture_threshold: Minimum luminance contrast of a texture pattern

    Returns:
        Estimated color, material and texture with per-attribute confidence
    """
    height, width = image.shape[:2]
    x0, y0, x1, y1 = box_to_pixels(box, width, height)
    crop = image[y0:y1, x0:x1]
    if crop.shape[0] * crop.shape[1] < min_pixels or min(crop.shape[:2]) < 3:
        return AttributeEstimate(unevaluable=True)

    valid = ~saturated(crop)
    color, color_conf = color_vote(crop)
    estimate = AttributeEstimate(color=color, confidence={"color": color_conf})
    texture, contrast = _texture(crop, valid, texture_threshold)
    estimate.texture = texture
    estimate.confidence["texture"] = contrast
    if color is not None:
        material, alpha = _material(crop, valid, color)
        estimate.material = material
        estimate.confidence["material"] = alpha
    return estimate


def extract_person_colors(
    image: np.ndarray, box: BoundingBox, min_pixels: int = 16
) -> Optional[Dict[str, Optional[str]]]:
    """Voted color of every clothing band; None when the box is too small."""
    height, width = image.shape[:2]
    x0, y0, x1, y1 = box_to_pixels(box, width, height)
    crop = image[y0:y1, x0:x1]
    if crop.shape[0] * crop.shape[1] < min_pixels:
        return None
    colors: Dict[str, Optional[str]] = {}
    for region, (r0, r1) in person_region_rows(crop.shape[0]).items():
        colors[region] = color_vote(crop[r0:r1])[0] if r1 > r0 else None
    return colors


class OracleJudge(AttributeJudge):
    """All specified attributes must be recovered for an instance to count as correct."""

    def __init__(self, config: Optional[EvalConfig] = None):
        self.config = config or EvalConfig()

    def judge(self, image: np.ndarray, box: BoundingBox, spec: InstanceAttrs) -> Judgement:
        if isinstance(spec, PersonSpec):
            colors = extract_person_colors(image, box, self.config.min_pixels)
            if colors is None:
                return Judgement(None, {}, unevaluable=True)
            correct = all(colors.get(r.region) == r.color for r in spec.regions)
            return Judgement(correct, dict(colors))

        estimate = oracle_extract_attributes(
            image, box, self.config.min_pixels, self.config.texture_threshold
        )
        if estimate.unevaluable:
            return Judgement(None, {}, unevaluable=True)
        predicted = {"color": estimate.color, "material": estimate.material, "texture": estimate.texture}
        return Judgement(object_matches(spec, estimate), predicted)


def object_matches(spec: AttributeSpec, estimate: AttributeEstimate) -> bool:
    if estimate.color != spec.color:
        return False
    if spec.material is not None and estimate.material != spec.material:
        return False
    if spec.texture is not None and estimate.texture != spec.texture:
        return False
    return True
