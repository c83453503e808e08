import json
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image
from pydantic import ValidationError

from deig.api.schemas.scene import InstanceAttrsModel, InstanceRecord, SceneFile
from deig.config.constants import SCENE_FILE_VERSION
from deig.core.commons.errors import ContractViolation, UsageError
from deig.core.condition import BoundingBox, GenerationCondition
from deig.core.synth.render import from_uint8, to_uint8
from deig.core.synth.scene import SceneSpec, attrs_from_dict
from deig.types import Level

PathLike = Union[str, Path]


def scene_to_file(spec: SceneSpec) -> SceneFile:
    return SceneFile(
        version=SCENE_FILE_VERSION,
        seed=spec.seed,
        index=spec.index,
        level=spec.level.value,
        global_prompt=spec.global_prompt,
        instances=[
            InstanceRecord(box=box.as_list(), caption=caption, attrs=InstanceAttrsModel(**attrs.to_dict()))
            for box, caption, attrs in zip(spec.boxes, spec.captions, spec.attrs)
        ],
    )


def scene_from_file(document: SceneFile) -> SceneSpec:
    """
    Rebuild a ground-truth scene.

    Raises:
        ContractViolation: If the document lacks level or attributes
    """
    if document.level is None or any(inst.attrs is None for inst in document.instances):
        raise ContractViolation("Scene file has no ground-truth level/attributes")
    return SceneSpec(
        seed=document.seed,
        level=Level(document.level),
        boxes=tuple(BoundingBox.from_list(inst.box) for inst in document.instances),
        attrs=tuple(attrs_from_dict(inst.attrs.model_dump(exclude_none=True)) for inst in document.instances),
        captions=tuple(inst.caption for inst in document.instances),
        global_prompt=document.global_prompt,
        index=document.index,
    )


def condition_from_file(document: SceneFile) -> GenerationCondition:
    return GenerationCondition.build(
        document.global_prompt,
        [(BoundingBox.from_list(inst.box), inst.caption) for inst in document.instances],
    )


def write_scene(path: PathLike, spec: SceneSpec) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scene_to_file(spec).model_dump(), indent=2) + "\n")
    return path


def read_scene_file(path: PathLike) -> SceneFile:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"Scene file not found: {path}")
    try:
        document = SceneFile.model_validate_json(path.read_text())
    except ValidationError as e:
        raise ContractViolation(f"Invalid scene file {path}: {e}") from e
    if document.version != SCENE_FILE_VERSION:
        raise ContractViolation(f"Unsupported scene file version {document.version}")
    return document


def write_ppm(path: PathLike, image: np.ndarray) -> Path:
    """Write an (H, W, 3) raster in [0, 1] as binary PPM (P6)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(image)).save(path, format="PPM")
    return path


def read_ppm(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"Image not found: {path}")
    with Image.open(path) as image:
        return from_uint8(np.asarray(image.convert("RGB")))


def write_pgm(path: PathLike, values: np.ndarray) -> Path:
    """Write an (H, W) array in [0, 1] as binary PGM (P5)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(values)).save(path, format="PPM")
    return path
