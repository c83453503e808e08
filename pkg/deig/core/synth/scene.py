from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from deig.config.constants import (
    GARMENTS,
    MATERIALS,
    OBJECT_NOUNS,
    PALETTE,
    PERSON_REGIONS,
    TEXTURES,
)
from deig.core.commons.errors import ContractViolation
from deig.core.condition import BoundingBox, GenerationCondition
from deig.types import Level, SceneKind

COLOR_NAMES = list(PALETTE)


@dataclass(frozen=True)
class AttributeSpec:
    """Object attributes; material and texture are optional per level."""

    color: str
    noun: str
    material: Optional[str] = None
    texture: Optional[str] = None

    def __post_init__(self):
        if self.color not in PALETTE:
            raise ContractViolation(f"Unknown color {self.color!r}")
        if self.noun not in OBJECT_NOUNS:
            raise ContractViolation(f"Unknown object noun {self.noun!r}")
        if self.material is not None and self.material not in MATERIALS:
            raise ContractViolation(f"Unknown material {self.material!r}")
        if self.texture is not None and self.texture not in TEXTURES:
            raise ContractViolation(f"Unknown texture {self.texture!r}")

    @property
    def level(self) -> Level:
        if self.material and self.texture:
            return Level.L4
        if self.texture:
            return Level.L3
        if self.material:
            return Level.L2
        return Level.L1

    def to_dict(self) -> Dict[str, Optional[str]]:
        return {"color": self.color, "material": self.material, "texture": self.texture, "noun": self.noun}


@dataclass(frozen=True)
class PersonRegion:
    region: str
    color: str
    garment: str

    def __post_init__(self):
        if self.region not in PERSON_REGIONS:
            raise ContractViolation(f"Unknown clothing region {self.region!r}")
        if self.color not in PALETTE:
            raise ContractViolation(f"Unknown color {self.color!r}")
        if self.garment not in GARMENTS[self.region]:
            raise ContractViolation(f"{self.garment!r} is not a {self.region} garment")


@dataclass(frozen=True)
class PersonSpec:
    """One to three clothing regions, ordered top to bottom."""

    regions: Tuple[PersonRegion, ...]

    def __post_init__(self):
        regions = tuple(sorted(self.regions, key=lambda r: PERSON_REGIONS.index(r.region)))
        if not 1 <= len(regions) <= 3:
            raise ContractViolation("A person needs one to three clothing regions")
        if len({r.region for r in regions}) != len(regions):
            raise ContractViolation("Clothing regions must be distinct")
        object.__setattr__(self, "regions", regions)

    @property
    def level(self) -> Level:
        return Level(f"C{len(self.regions)}")

    def region(self, name: str) -> Optional[PersonRegion]:
        return next((r for r in self.regions if r.region == name), None)

    def to_dict(self) -> Dict[str, List[Dict[str, str]]]:
        return {
            "regions": [
                {"region": r.region, "color": r.color, "garment": r.garment} for r in self.regions
            ]
        }


InstanceAttrs = Union[AttributeSpec, PersonSpec]


def attrs_from_dict(data: Dict) -> InstanceAttrs:
    if "regions" in data:
        return PersonSpec(tuple(PersonRegion(**r) for r in data["regions"]))
    return AttributeSpec(
        color=data["color"],
        noun=data["noun"],
        material=data.get("material"),
        texture=data.get("texture"),
    )


@dataclass(frozen=True)
class SceneSpec:
    """A synthetic ground-truth scene; the raster and latent are derived on demand."""

    seed: int
    level: Level
    boxes: Tuple[BoundingBox, ...]
    attrs: Tuple[InstanceAttrs, ...]
    captions: Tuple[str, ...]
    global_prompt: str
    index: int = 0

    def __post_init__(self):
        if not (len(self.boxes) == len(self.attrs) == len(self.captions)) or not self.boxes:
            raise ContractViolation("A scene needs matching, non-empty boxes, attrs and captions")
        kinds = {a.level.kind for a in self.attrs}
        if kinds != {self.level.kind}:
            raise ContractViolation(f"Scene level {self.level.value} does not match its instances")

    @property
    def n(self) -> int:
        return len(self.boxes)

    @property
    def kind(self) -> SceneKind:
        return self.level.kind

    def condition(self) -> GenerationCondition:
        return GenerationCondition.build(self.global_prompt, list(zip(self.boxes, self.captions)))
