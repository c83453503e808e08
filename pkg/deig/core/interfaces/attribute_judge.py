from abc import ABC, abstractmethod

import numpy as np

from deig.core.condition import BoundingBox


class AttributeJudge(ABC):
    """Abstract base class for per-instance attribute judges over RGB rasters"""

    @abstractmethod
    def judge(self, image: np.ndarray, box: BoundingBox, spec) -> "object":
        """
        Decide which of the specified attributes are present inside a box.

        Args:
            image: (H, W, 3) raster in [0, 1]
            box: Instance box
            spec: Ground-truth attribute assignment of the instance

        Returns:
            Judgement with per-attribute correctness
        """
        pass
