from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class InstanceEval(BaseModel):
    index: int
    correct: Optional[bool] = Field(None, description="All specified attributes recovered; None if unevaluable")
    unevaluable: bool = False
    iou: float = 0.0
    leaked: Optional[bool] = Field(None, description="Region shows another instance's color; None if not scored")
    predicted: Dict[str, Optional[str]] = Field(default_factory=dict)


class SceneEval(BaseModel):
    index: int
    level: str
    instances: List[InstanceEval]


class EvalReport(BaseModel):
    """Oracle evaluation report. Level entries are None when no scene has that level."""

    maa_human: Dict[str, Optional[float]] = Field(..., description="C1-C3 and average")
    maa_obj: Dict[str, Optional[float]] = Field(..., description="L1-L4 and average")
    miou: float
    leakage: float
    n_scenes: int
    n_instances: int
    n_unevaluable: int
    scene_counts: Dict[str, int]
    scenes: List[SceneEval]


class AblationArm(BaseModel):
    arm: str
    overrides: Dict[str, object]
    maa: Optional[float]
    leakage: float
    miou: float
    # trainable phase-two parameters and DFM attention FLOPs per denoiser pass
    parameters: Optional[int] = None
    attention_flops: Optional[int] = None


class AblationReport(BaseModel):
    what: str
    arms: List[AblationArm]
    deltas: Dict[str, float] = Field(default_factory=dict)


class GradcheckRow(BaseModel):
    suite: str
    name: str
    max_rel_error: float
    tolerance: float
    checked: int
    passed: bool


class GradcheckReport(BaseModel):
    passed: bool
    rows: List[GradcheckRow]
    failing: List[str] = Field(default_factory=list)
