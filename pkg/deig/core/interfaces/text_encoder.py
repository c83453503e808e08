from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Tuple

from deig.core.condition import GenerationCondition
from deig.core.tensor import Tensor


@dataclass
class TextFeatureBatch:
    """Frozen per-instance features (B, N, S_tau, C) and the token count of each caption."""

    features: Tensor
    lengths: List[int]


@dataclass
class GlobalPromptFeatures:
    """Frozen global prompt features (B, S_tau_global, C) and the unpadded length."""

    features: Tensor
    length: int


class TextEncoder(ABC):
    """Abstract base class for frozen caption encoders"""

    @property
    @abstractmethod
    def channels(self) -> int:
        pass

    @property
    @abstractmethod
    def max_tokens(self) -> int:
        pass

    @abstractmethod
    def encode_caption(self, caption: str) -> Tensor:
        """
        Encode one instance caption.

        Args:
            caption: Caption text

        Returns:
            Frozen (S_tau, C) feature sequence, zero at pad positions
        """
        pass

    @abstractmethod
    def encode_condition(
        self, cond: GenerationCondition
    ) -> Tuple[TextFeatureBatch, GlobalPromptFeatures]:
        """
        Encode every instance caption and the global prompt of a condition.

        Args:
            cond: Generation condition

        Returns:
            Instance features (1, N, S_tau, C) and global prompt features
        """
        pass
