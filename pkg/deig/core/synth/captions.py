from typing import List, Optional, Sequence

from deig.config.constants import GARMENTS, MATERIALS, PALETTE, PLURAL_GARMENTS, TEXTURES
from deig.core.commons.errors import ContractViolation
from deig.core.synth.scene import AttributeSpec, InstanceAttrs, PersonRegion, PersonSpec
from deig.core.text.templates import CaptionTemplates
from deig.core.text.vocab import tokenize

_templates: Optional[CaptionTemplates] = None


def get_templates() -> CaptionTemplates:
    global _templates
    if _templates is None:
        _templates = CaptionTemplates("captions")
    return _templates


def caption_from_attrs(attrs: InstanceAttrs, coarse: bool = False) -> str:
    """
    Realise the caption of one instance.

    Args:
        attrs: Object or person attributes
        coarse: Objects are captioned "a {color} {noun}" only

    Returns:
        Caption, e.g. "a red striped fabric pillow" or
        "a person wearing a red hat and blue pants"
    """
    templates = get_templates()
    if isinstance(attrs, PersonSpec):
        regions = [
            {"color": r.color, "garment": r.garment, "plural": r.garment in PLURAL_GARMENTS}
            for r in attrs.regions
        ]
        return templates.render("person", regions=regions)
    if coarse:
        return templates.render("coarse_object", color=attrs.color, noun=attrs.noun)
    return templates.render(
        "object",
        color=attrs.color,
        texture=attrs.texture,
        material=attrs.material,
        noun=attrs.noun,
    )


def global_prompt(captions: Sequence[str]) -> str:
    return get_templates().render("global", captions=list(captions))


_GARMENT_REGION = {garment: region for region, garments in GARMENTS.items() for garment in garments}


def _parse_person(words: List[str], caption: str) -> PersonSpec:
    regions = []
    segment: List[str] = []
    for word in words + ["and"]:
        if word != "and":
            segment.append(word)
            continue
        if segment and segment[0] == "a":
            segment = segment[1:]
        if len(segment) != 2 or segment[0] not in PALETTE or segment[1] not in _GARMENT_REGION:
            raise ContractViolation(f"Cannot parse clothing segment {' '.join(segment)!r} in {caption!r}")
        regions.append(PersonRegion(_GARMENT_REGION[segment[1]], segment[0], segment[1]))
        segment = []
    return PersonSpec(tuple(regions))


def parse_caption(caption: str) -> InstanceAttrs:
    """
    Recover attributes from a template caption.

    Raises:
        ContractViolation: If the caption is not producible by the templates
    """
    words = tokenize(caption)
    if words[:3] == ["a", "person", "wearing"]:
        return _parse_person(words[3:], caption)
    if len(words) < 3 or words[0] != "a" or words[1] not in PALETTE:
        raise ContractViolation(f"Cannot parse caption {caption!r}")
    color, rest = words[1], words[2:]
    texture = rest.pop(0) if rest and rest[0] in TEXTURES else None
    material = rest.pop(0) if rest and rest[0] in MATERIALS else None
    if len(rest) != 1:
        raise ContractViolation(f"Cannot parse caption {caption!r}")
    return AttributeSpec(color=color, noun=rest[0], material=material, texture=texture)
