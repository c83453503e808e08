"""Connected-component instance detector."""

from typing import List, Optional

import numpy as np
from skimage import measure, morphology

from deig.core.condition import BoundingBox
from deig.core.synth.render import BACKGROUND, PALETTE_RGB, SKIN, box_to_pixels
from deig.core.synth.scene import InstanceAttrs, PersonSpec

BACKGROUND_LABEL = "background"
SKIN_LABEL = "skin"
LABELS: List[str] = [*PALETTE_RGB, BACKGROUND_LABEL, SKIN_LABEL]
_LABEL_MATRIX = np.stack([*PALETTE_RGB.values(), BACKGROUND, SKIN])
_CLOSING_FOOTPRINT = np.ones((3, 3), dtype=bool)


def label_pixels(image: np.ndarray) -> np.ndarray:
    """(H, W) index into LABELS of the nearest palette/background/skin color."""
    d = ((image[..., None, :] - _LABEL_MATRIX) ** 2).sum(axis=-1)
    return d.argmin(axis=-1)


def target_labels(attrs: InstanceAttrs) -> List[int]:
    if isinstance(attrs, PersonSpec):
        names = [SKIN_LABEL, *(r.color for r in attrs.regions)]
    else:
        names = [attrs.color]
    return [LABELS.index(name) for name in names]


def detect_instance(
    labels: np.ndarray,
    box: BoundingBox,
    attrs: InstanceAttrs,
    dilation_px: int = 4,
) -> Optional[BoundingBox]:
    """
    Locate one instance near its specified box.

    Pixels carrying the instance's target label(s) inside the box dilated by
    ``dilation_px`` are closed morphologically; the tight box of the largest
    4-connected component is returned, or None if nothing matched.
    """
    height, width = labels.shape
    x0, y0, x1, y1 = box_to_pixels(box, width, height)
    x0, y0 = max(0, x0 - dilation_px), max(0, y0 - dilation_px)
    x1, y1 = min(width, x1 + dilation_px), min(height, y1 + dilation_px)

    window = np.isin(labels[y0:y1, x0:x1], target_labels(attrs))
    if not window.any():
        return None
    closed = morphology.closing(window, _CLOSING_FOOTPRINT) | window
    components = measure.label(closed, connectivity=1)
    regions = measure.regionprops(components)
    largest = max(regions, key=lambda r: (r.area, -r.label))
    r0, c0, r1, c1 = largest.bbox
    return BoundingBox((x0 + c0) / width, (y0 + r0) / height, (x0 + c1) / width, (y0 + r1) / height)


def box_iou(predicted: Optional[BoundingBox], truth: BoundingBox) -> float:
    return 0.0 if predicted is None else predicted.iou(truth)
