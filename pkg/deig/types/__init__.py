from enum import Enum, IntEnum


class SceneKind(Enum):
    OBJECT = "object"  # Objects with color/material/texture attributes
    PERSON = "person"  # Persons with colored clothing regions


class Level(Enum):
    C1 = "C1"  # One clothing region
    C2 = "C2"  # Two clothing regions
    C3 = "C3"  # Three clothing regions
    L1 = "L1"  # Color only
    L2 = "L2"  # Color + material
    L3 = "L3"  # Color + texture
    L4 = "L4"  # Color + material + texture

    @property
    def kind(self) -> SceneKind:
        return SceneKind.PERSON if self.value.startswith("C") else SceneKind.OBJECT


class AblationKind(Enum):
    MASK = "mask"  # Instance mask replaced by all zeros
    S_DIM = "s-dim"  # Sweep of the aggregated semantic dimension
    IDE = "ide"  # IDE replaced by a direct text projection
    CAPTIONS = "captions"  # Training on coarse color-noun captions


class ExitCode(IntEnum):
    SUCCESS = 0
    USAGE_ERROR = 1
    CONTRACT_VIOLATION = 2
    NUMERICAL_FAILURE = 3
