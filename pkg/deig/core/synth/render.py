"""Ground-truth rasteriser: attributes to pixel patterns.

Rasters are float arrays of shape (H, W, 3) in [0, 1]. Inside an object box:

* every pixel starts at the palette color;
* material ``k`` blends the interior odd/odd lattice towards mid-gray by
  ``MATERIAL_BLEND_STEP * (k + 1)``;
* texture pixels move towards black (bright colors) or white (dark colors) by
  ``TEXTURE_CONTRAST``; texture patterns never touch the odd/odd lattice.

Patterns use box-local coordinates and skip the 1-pixel border.
"""

from typing import Dict, Sequence, Tuple

import numpy as np

from deig.config.constants import (
    BACKGROUND_RGB,
    MATERIAL_BLEND_STEP,
    MATERIALS,
    PALETTE,
    PERSON_REGIONS,
    REGION_HEIGHT_FRACTIONS,
    SKIN_RGB,
    TEXTURE_CONTRAST,
    TEXTURE_DARK_THRESHOLD,
)
from deig.core.condition import BoundingBox
from deig.core.synth.scene import AttributeSpec, InstanceAttrs, PersonSpec, SceneSpec

MATERIAL_TARGET = 0.5
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

PixelBox = Tuple[int, int, int, int]


def rgb(values: Sequence[int]) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) / 255.0


PALETTE_RGB: Dict[str, np.ndarray] = {name: rgb(v) for name, v in PALETTE.items()}
BACKGROUND = rgb(BACKGROUND_RGB)
SKIN = rgb(SKIN_RGB)


def luminance(color: np.ndarray) -> np.ndarray:
    return np.asarray(color) @ LUMA_WEIGHTS


def box_to_pixels(box: BoundingBox, width: int, height: int = None) -> PixelBox:
    """Half-open pixel rectangle (x0, y0, x1, y1) covered by a normalised box."""
    height = height or width
    x0, x1 = int(round(box.x0 * width)), int(round(box.x1 * width))
    y0, y1 = int(round(box.y0 * height)), int(round(box.y1 * height))
    return x0, y0, max(x1, x0 + 1), max(y1, y0 + 1)


def interior_mask(h: int, w: int) -> np.ndarray:
    mask = np.zeros((h, w), dtype=bool)
    mask[1:-1, 1:-1] = True
    return mask


def material_lattice(h: int, w: int) -> np.ndarray:
    """Interior pixels with odd local x and odd local y."""
    ly, lx = np.mgrid[0:h, 0:w]
    return interior_mask(h, w) & (lx % 2 == 1) & (ly % 2 == 1)


def texture_mask(texture: str, h: int, w: int) -> np.ndarray:
    ly, lx = np.mgrid[0:h, 0:w]
    if texture == "striped":
        pattern = ly % 4 == 2
    elif texture == "plaid":
        pattern = (ly % 6 == 3) | (lx % 6 == 3)
    elif texture == "floral":
        pattern = (lx + ly) % 5 == 2
    elif texture == "polka-dotted":
        pattern = (lx % 4 == 2) & (ly % 4 == 2)
    else:
        raise ValueError(f"Unknown texture {texture!r}")
    return pattern & interior_mask(h, w) & ~material_lattice(h, w)


def texture_target(color: np.ndarray) -> float:
    return 0.0 if luminance(color) >= TEXTURE_DARK_THRESHOLD else 1.0


def material_blend(index: int) -> float:
    return MATERIAL_BLEND_STEP * (index + 1)


def render_object(attrs: AttributeSpec, h: int, w: int) -> np.ndarray:
    base = PALETTE_RGB[attrs.color]
    patch = np.broadcast_to(base, (h, w, 3)).copy()
    if attrs.material is not None:
        alpha = material_blend(MATERIALS.index(attrs.material))
        patch[material_lattice(h, w)] = base + (MATERIAL_TARGET - base) * alpha
    if attrs.texture is not None:
        target = texture_target(base)
        patch[texture_mask(attrs.texture, h, w)] = base + (target - base) * TEXTURE_CONTRAST
    return patch


def person_region_rows(h: int) -> Dict[str, Tuple[int, int]]:
    """Row ranges of the hat/upper/lower bands inside a person box of height h."""
    rows: Dict[str, Tuple[int, int]] = {}
    start = 0
    for i, region in enumerate(PERSON_REGIONS):
        if i == len(PERSON_REGIONS) - 1:
            stop = h
        else:
            stop = min(h, start + max(1, int(round(REGION_HEIGHT_FRACTIONS[region] * h))))
        rows[region] = (start, stop)
        start = stop
    return rows


def render_person(attrs: PersonSpec, h: int, w: int) -> np.ndarray:
    patch = np.broadcast_to(SKIN, (h, w, 3)).copy()
    for region, (r0, r1) in person_region_rows(h).items():
        spec = attrs.region(region)
        if spec is not None:
            patch[r0:r1] = PALETTE_RGB[spec.color]
    return patch


def render_instance(attrs: InstanceAttrs, h: int, w: int) -> np.ndarray:
    if isinstance(attrs, PersonSpec):
        return render_person(attrs, h, w)
    return render_object(attrs, h, w)


def render_scene(spec: SceneSpec, resolution: int = 64) -> np.ndarray:
    """
    Render the ground-truth raster of a scene.

    Args:
        spec: Scene to render
        resolution: Square raster side in pixels

    Returns:
        (resolution, resolution, 3) float array in [0, 1]; later instances paint over earlier ones
    """
    image = np.broadcast_to(BACKGROUND, (resolution, resolution, 3)).copy()
    for box, attrs in zip(spec.boxes, spec.attrs):
        x0, y0, x1, y1 = box_to_pixels(box, resolution)
        image[y0:y1, x0:x1] = render_instance(attrs, y1 - y0, x1 - x0)
    return image


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def from_uint8(image: np.ndarray) -> np.ndarray:
    return np.asarray(image, dtype=np.float64) / 255.0
