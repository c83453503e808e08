from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from deig.api.schemas.report import GradcheckReport, GradcheckRow
from deig.config.settings import RunConfig, build_config
from deig.core.commons.logger import get_logger
from deig.core.commons.utils import make_rng
from deig.core.condition import BoundingBox, GenerationCondition
from deig.core.tensor import Parameter, Tensor, ops
from deig.core.tensor.gradcheck import GradcheckResult, check_parameters, run_op_suite
from deig.core.text.encoder import TextSimEncoder
from deig.models.dfm.attention import GatedFusionAttention
from deig.models.dfm.grounding import GroundingFuser
from deig.models.dfm.mask import mask_for_boxes
from deig.models.ide import InstanceDetailExtractor

logger = get_logger(__name__)

STACK_T_MAX = 10
STACK_TIMESTEP = 3
STACK_GRID = 4


def stack_config() -> RunConfig:
    """Two-instance stack with S=2, S_tau=4, C=8, two IDE layers and a 4x4 token grid."""
    return build_config(
        {
            "text_sim": {"channels": 8, "max_tokens": 4, "max_global_tokens": 8},
            "ide": {"s": 2, "n_layers": 2, "channels": 8, "heads": 2, "time_dim": 8},
            "dfm": {"n_freqs": 2, "heads": 2},
            "diffusion": {
                "t_max": STACK_T_MAX,
                "resolution": 8,
                "grid": STACK_GRID,
                "width": 8,
                "heads": 2,
                "block_levels": [0],
            },
            "bench": {"mode": "train"},
        }
    )


class StackUnderTest:
    """IDE, grounding fuser and one DFM wired as in a backbone block, with randomised weights."""

    def __init__(self, seed: int = 0, blocksparse: bool = False):
        config = stack_config()
        rng = make_rng(seed, "gradcheck_stack")
        c, width = config.ide.channels, config.diffusion.width
        self.ide = InstanceDetailExtractor(config.ide, STACK_T_MAX, rng)
        self.grounding = GroundingFuser(c, config.dfm.n_freqs, rng)
        self.dfm = GatedFusionAttention(width, c, config.dfm.heads, rng, blocksparse=blocksparse)

        self.boxes = [BoundingBox(0.0, 0.0, 0.5, 1.0), BoundingBox(0.5, 0.0, 1.0, 1.0)]
        cond = GenerationCondition.build("a red cup, a blue vase", list(zip(self.boxes, ["a red cup", "a blue vase"])))
        self.features, _ = TextSimEncoder(config.text_sim).encode_condition(cond)
        self.mask = mask_for_boxes(self.boxes, STACK_GRID, STACK_GRID, config.ide.s)
        self.visual = Tensor(rng.normal(size=(1, STACK_GRID * STACK_GRID, width)))
        self.weights = rng.uniform(-1.0, 1.0, size=self.visual.shape)

        # zero-initialised projections and a closed gate would hide most gradients
        for _, param in self.named_parameters():
            param.data = rng.normal(0.0, 0.3, param.shape)

    def named_parameters(self) -> List[Tuple[str, Parameter]]:
        return (
            self.ide.named_parameters("ide.")
            + self.grounding.named_parameters("grounding.")
            + self.dfm.named_parameters("dfm.")
        )

    def loss(self) -> Tensor:
        e_ase = self.ide(self.features, [STACK_TIMESTEP])
        g_ase = self.grounding(e_ase, self.boxes, [1, 1])
        out = self.dfm(self.visual, g_ase, self.mask)
        return ops.sum(ops.mul(out, self.weights))


def group_by_module(per_param: Dict[str, float]) -> Dict[str, float]:
    grouped: Dict[str, float] = {}
    for name, error in per_param.items():
        module = name.split(".", 1)[0]
        grouped[module] = max(grouped.get(module, 0.0), error)
    return grouped


def check_stack(seed: int = 0, blocksparse: bool = False) -> Tuple[GradcheckResult, Dict[str, float]]:
    stack = StackUnderTest(seed, blocksparse)
    name = "stack-blocksparse" if blocksparse else "stack"
    return check_parameters(name, stack.loss, stack.named_parameters(), make_rng(seed, "gradcheck_samples"))


def run_gradcheck(seed: int = 0, only_ops: Optional[Sequence[str]] = None) -> GradcheckReport:
    """
    Finite-difference checks of every op and of the IDE/grounding/DFM stack.

    Returns:
        GradcheckReport; ``passed`` is false when any row exceeds its tolerance
    """
    rows: List[GradcheckRow] = []

    def add(suite: str, result: GradcheckResult, name: Optional[str] = None, error: Optional[float] = None):
        value = result.max_rel_error if error is None else error
        rows.append(
            GradcheckRow(
                suite=suite,
                name=name or result.name,
                max_rel_error=value,
                tolerance=result.tolerance,
                checked=result.checked,
                passed=bool(np.isfinite(value)) and value < result.tolerance,
            )
        )

    for result in run_op_suite(make_rng(seed, "gradcheck_ops"), only_ops):
        add("ops", result)
    for blocksparse in (False, True):
        result, per_param = check_stack(seed, blocksparse)
        for module, error in group_by_module(per_param).items():
            add(result.name, result, module, error)

    failing = [f"{row.suite}:{row.name}" for row in rows if not row.passed]
    for row in rows:
        logger.info(f"{row.suite:<18} {row.name:<22} max_rel_error={row.max_rel_error:.3e} tol={row.tolerance:.0e}")
    return GradcheckReport(passed=not failing, rows=rows, failing=failing)
