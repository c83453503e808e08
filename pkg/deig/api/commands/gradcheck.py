import argparse
import json

from deig.api.commands.common import add_config_args, output_path, run_config
from deig.api.middleware.error_handler import handle_errors
from deig.core.commons.errors import GradcheckFailure
from deig.services.diagnostics.gradcheck import run_gradcheck


def register(subparsers) -> None:
    parser = subparsers.add_parser("gradcheck", help="Finite-difference gradient checks")
    add_config_args(parser)
    parser.add_argument("--seed", type=int, default=None, help="Check seed (default: config seed)")
    parser.add_argument("--out", default=None, help="Optional report JSON")
    parser.set_defaults(handler=gradcheck)


@handle_errors
def gradcheck(args: argparse.Namespace) -> int:
    config = run_config(args)
    report = run_gradcheck(config.seed if args.seed is None else args.seed)
    for row in report.rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"{status} {row.suite:<18} {row.name:<22} {row.max_rel_error:.3e} (tol {row.tolerance:.0e})")
    if args.out:
        path = output_path(config, args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report.model_dump(), indent=2) + "\n")
    if not report.passed:
        raise GradcheckFailure(report.failing)
    print("PASS")
    return 0
