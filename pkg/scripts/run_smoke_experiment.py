#!/usr/bin/env python3
"""Run the mask ablation on the smoke config and record the measured oracle."""

import argparse
import json
import os
import sys
from pathlib import Path

# Add the project root to the Python path to allow imports to work correctly
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from deig.config.constants import SMOKE_MAX_LEAKAGE, SMOKE_MIN_MAA  # noqa: E402
from deig.config.settings import load_config  # noqa: E402
from deig.core.commons.logger import get_logger  # noqa: E402
from deig.services.ablation.main import AblationService, mask_ablation_checks  # noqa: E402
from deig.types import AblationKind  # noqa: E402

logger = get_logger(__name__)

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(ROOT / "configs" / "smoke.json"))
    parser.add_argument("--oracle", default=str(ROOT / "configs" / "smoke.oracle.json"))
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    config = load_config(args.config)
    report = AblationService(config, args.jobs).run(AblationKind.MASK, config.output_dir)
    checks = mask_ablation_checks(report)
    oracle = {
        "status": "measured",
        "config": os.path.relpath(args.config, ROOT),
        "seed": config.seed,
        "thresholds": {"min_maa": SMOKE_MIN_MAA, "max_leakage": SMOKE_MAX_LEAKAGE},
        "arms": [arm.model_dump() for arm in report.arms],
        "deltas": report.deltas,
        "checks": checks,
    }
    Path(args.oracle).write_text(json.dumps(oracle, indent=2) + "\n")
    for name, passed in checks.items():
        logger.info(f"{'PASS' if passed else 'FAIL'} {name}")
    return 0 if all(checks.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
