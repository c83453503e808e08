from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from deig.config.constants import SCENE_FILE_VERSION


class RegionAttrs(BaseModel):
    model_config = ConfigDict(extra="forbid")

    region: str = Field(..., description="Clothing region (hat/upper/lower)")
    color: str = Field(..., description="Palette color name")
    garment: str = Field(..., description="Garment word")


class InstanceAttrsModel(BaseModel):
    """Object attributes or person clothing regions."""

    model_config = ConfigDict(extra="forbid")

    color: Optional[str] = Field(None, description="Object palette color")
    material: Optional[str] = Field(None, description="Object material")
    texture: Optional[str] = Field(None, description="Object texture")
    noun: Optional[str] = Field(None, description="Object noun")
    regions: Optional[List[RegionAttrs]] = Field(None, description="Person clothing regions")


class InstanceRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    box: List[float] = Field(..., min_length=4, max_length=4, description="[x0, y0, x1, y1] in [0, 1]")
    caption: str = Field(..., description="Instance caption")
    attrs: Optional[InstanceAttrsModel] = Field(None, description="Ground-truth attributes")


class SceneFile(BaseModel):
    """Scene JSON document."""

    model_config = ConfigDict(extra="forbid")

    version: int = Field(SCENE_FILE_VERSION, description="Scene file format version")
    seed: int = Field(0, description="Generator seed")
    index: int = Field(0, description="Scene index within its run")
    level: Optional[str] = Field(None, description="C1-C3 or L1-L4")
    global_prompt: str = Field(..., description="Comma-joined instance captions")
    instances: List[InstanceRecord] = Field(..., min_length=1)


class ManifestEntry(BaseModel):
    index: int
    scene: str = Field(..., description="Scene JSON file name")
    image: str = Field(..., description="Ground-truth PPM file name")
    level: str
    n_instances: int


class BenchManifest(BaseModel):
    """Manifest written by gen-bench next to the scene files."""

    seed: int
    count: int
    mode: str
    level_counts: dict = Field(default_factory=dict)
    scenes: List[ManifestEntry] = Field(default_factory=list)
