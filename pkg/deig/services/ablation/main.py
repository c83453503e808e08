import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from deig.api.schemas.report import AblationArm, AblationReport, EvalReport
from deig.config.constants import SMOKE_MAX_LEAKAGE, SMOKE_MIN_MAA
from deig.config.settings import RunConfig
from deig.core.commons.logger import get_logger, log_execution
from deig.core.commons.utils import derive_seed
from deig.core.synth.scene import SceneSpec
from deig.models.deig_model import DeigModel, load_model
from deig.services.bench.main import BenchService
from deig.services.evaluation.main import EvaluationService, headline_maa, write_report
from deig.services.sampling.main import SamplingService
from deig.services.training.main import TrainingService
from deig.types import AblationKind

logger = get_logger(__name__)

S_DIM_SWEEP = (2, 4, 8, 16, 32)
ARM_CONFIG_FILE = "arm.json"
CHECKPOINT_FILE = "model.ckpt"


def ablation_arms(what: AblationKind, config: RunConfig) -> List[Tuple[str, Dict[str, Any]]]:
    """Named config overrides per arm; the first arm is the reference for deltas."""
    if what == AblationKind.MASK:
        return [("mask-on", {"dfm.use_instance_mask": True}), ("mask-off", {"dfm.use_instance_mask": False})]
    if what == AblationKind.IDE:
        return [("ide-on", {"ide.enabled": True}), ("ide-off", {"ide.enabled": False})]
    if what == AblationKind.CAPTIONS:
        return [("fine", {"bench.coarse_captions": False}), ("coarse", {"bench.coarse_captions": True})]
    # one caption width for every arm, so S is the only factor that changes
    max_tokens = max(config.text_sim.max_tokens, *S_DIM_SWEEP)
    return [(f"s{s}", {"ide.s": s, "text_sim.max_tokens": max_tokens}) for s in S_DIM_SWEEP]


def arm_cost(config: RunConfig) -> Dict[str, int]:
    """Trainable phase-two parameters and DFM attention FLOPs at the bench's largest instance count."""
    model = DeigModel(config)
    _, n_instances = config.bench.instance_range()
    return {
        "parameters": model.instance_parameter_count(),
        "attention_flops": model.dfm_attention_flops(n_instances),
    }


def mask_ablation_checks(
    report: AblationReport, min_maa: float = SMOKE_MIN_MAA, max_leakage: float = SMOKE_MAX_LEAKAGE
) -> Dict[str, bool]:
    """Directional checks: the masked arm meets the floors and beats the unmasked arm."""
    arms = {arm.arm: arm for arm in report.arms}
    on, off = arms["mask-on"], arms["mask-off"]
    return {
        "mask_on_maa": on.maa is not None and on.maa >= min_maa,
        "mask_on_leakage": on.leakage <= max_leakage,
        "mask_off_leaks_more": off.leakage > on.leakage,
        "mask_off_lower_maa": on.maa is not None and off.maa is not None and off.maa < on.maa,
    }


class AblationService:
    """
    Trains one model per arm, samples the same held-out scenes with each and
    evaluates them. Arm checkpoints are reused when their effective config matches.
    """

    def __init__(self, config: RunConfig, jobs: int = 1):
        self.config = config
        self.jobs = jobs

    def held_out_scenes(self) -> List[SceneSpec]:
        """Test scenes from the base config, identical for every arm."""
        seed = derive_seed(self.config.seed, "held_out")
        return BenchService(self.config).generate(seed, self.config.eval.held_out, jobs=self.jobs)

    def arm_model(self, config: RunConfig, arm_dir: Path) -> SamplingService:
        checkpoint = arm_dir / CHECKPOINT_FILE
        marker = arm_dir / ARM_CONFIG_FILE
        effective = config.model_dump()
        if checkpoint.is_file() and marker.is_file() and json.loads(marker.read_text()) == effective:
            logger.info(f"Reusing cached checkpoint {checkpoint}")
            model, encoder = load_model(checkpoint, config)
            return SamplingService(model, encoder)
        result = TrainingService(config).train(checkpoint)
        marker.write_text(json.dumps(effective, indent=2, sort_keys=True) + "\n")
        return SamplingService(result.model, result.encoder)

    def evaluate_arm(self, config: RunConfig, arm_dir: Path) -> EvalReport:
        sampler = self.arm_model(config, arm_dir)
        scenes = self.held_out_scenes()
        seeds = [derive_seed(self.config.seed, "held_out_sample", scene.index) for scene in scenes]
        images = sampler.sample_many([scene.condition() for scene in scenes], seeds)
        report = EvaluationService(config.eval, self.jobs).evaluate(scenes, images)
        write_report(report, arm_dir / "eval.json")
        return report

    @log_execution(logger)
    def run(self, what: AblationKind, out_dir: Union[str, Path]) -> AblationReport:
        """
        Run every arm of one ablation.

        Args:
            what: Ablation kind
            out_dir: Run output directory; arms live under ablation/<what>/<arm>

        Returns:
            AblationReport with per-arm scores and, for two-arm ablations,
            second-minus-first deltas
        """
        root = Path(out_dir) / "ablation" / what.value
        arms: List[AblationArm] = []
        for name, overrides in ablation_arms(what, self.config):
            arm_dir = root / name
            arm_dir.mkdir(parents=True, exist_ok=True)
            arm_config = self.config.with_overrides(overrides)
            report = self.evaluate_arm(arm_config, arm_dir)
            arms.append(
                AblationArm(
                    arm=name,
                    overrides=overrides,
                    maa=headline_maa(report),
                    leakage=report.leakage,
                    miou=report.miou,
                    **arm_cost(arm_config),
                )
            )
            logger.info(f"Arm {name}: MAA={arms[-1].maa} leakage={report.leakage:.3f} mIoU={report.miou:.3f}")

        deltas: Dict[str, float] = {}
        if len(arms) == 2:
            first, second = arms
            if first.maa is not None and second.maa is not None:
                deltas["maa"] = second.maa - first.maa
            deltas["leakage"] = second.leakage - first.leakage
            deltas["miou"] = second.miou - first.miou
        result = AblationReport(what=what.value, arms=arms, deltas=deltas)
        self.write(result, root)
        return result

    @staticmethod
    def write(report: AblationReport, root: Path) -> None:
        root.mkdir(parents=True, exist_ok=True)
        (root / "report.json").write_text(json.dumps(report.model_dump(), indent=2) + "\n")
        with (root / "report.csv").open("w", newline="") as handle:
            writer = csv.writer(handle)
            if report.what == AblationKind.S_DIM.value:
                writer.writerow(["s", "maa", "parameters", "attention_flops"])
                for arm in report.arms:
                    maa = "" if arm.maa is None else f"{arm.maa:.6f}"
                    writer.writerow([arm.overrides["ide.s"], maa, arm.parameters, arm.attention_flops])
            else:
                writer.writerow(["arm", "maa", "leakage", "miou"])
                for arm in report.arms:
                    maa = "" if arm.maa is None else f"{arm.maa:.6f}"
                    writer.writerow([arm.arm, maa, f"{arm.leakage:.6f}", f"{arm.miou:.6f}"])
