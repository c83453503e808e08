from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from deig.core.commons.errors import ContractViolation, InvalidBoxError


@dataclass(frozen=True)
class BoundingBox:
    """Normalised box with 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise InvalidBoxError(
                f"Invalid box ({self.x0}, {self.y0}, {self.x1}, {self.y1}): "
                "need 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1"
            )

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "BoundingBox":
        if len(values) != 4:
            raise InvalidBoxError(f"A box needs 4 coordinates, got {len(values)}")
        return cls(*(float(v) for v in values))

    def as_list(self) -> List[float]:
        return [self.x0, self.y0, self.x1, self.y1]

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def intersection(self, other: "BoundingBox") -> float:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        return max(w, 0.0) * max(h, 0.0)

    def iou(self, other: "BoundingBox") -> float:
        inter = self.intersection(other)
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class InstanceCondition:
    box: BoundingBox
    caption: str


@dataclass(frozen=True)
class GenerationCondition:
    """Global prompt plus per-instance (box, caption) pairs."""

    global_prompt: str
    instances: Tuple[InstanceCondition, ...]
    m_flags: Optional[Tuple[int, ...]] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if not self.instances:
            raise ContractViolation("A generation condition needs at least one instance")
        if self.m_flags is not None:
            flags = tuple(int(m) for m in self.m_flags)
            if len(flags) != len(self.instances) or any(m not in (0, 1) for m in flags):
                raise ContractViolation("m_flags needs one 0/1 flag per instance")
            object.__setattr__(self, "m_flags", flags)

    @classmethod
    def build(
        cls,
        global_prompt: str,
        pairs: Sequence[Tuple[BoundingBox, str]],
        m_flags: Optional[Sequence[int]] = None,
    ) -> "GenerationCondition":
        return cls(
            global_prompt,
            tuple(InstanceCondition(box, caption) for box, caption in pairs),
            tuple(m_flags) if m_flags is not None else None,
        )

    @property
    def n(self) -> int:
        return len(self.instances)

    @property
    def boxes(self) -> List[BoundingBox]:
        return [inst.box for inst in self.instances]

    @property
    def captions(self) -> List[str]:
        return [inst.caption for inst in self.instances]

    @property
    def flags(self) -> Tuple[int, ...]:
        return self.m_flags if self.m_flags is not None else (1,) * self.n

    def check_capacity(self, max_instances: int) -> None:
        if self.n > max_instances:
            raise ContractViolation(
                f"Condition has {self.n} instances, configured maximum is {max_instances}"
            )
