import argparse

from deig.api.commands.common import add_config_args, echo, output_path, run_config
from deig.api.middleware.error_handler import handle_errors
from deig.services.evaluation.main import EvaluationService, write_report


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Score images against scene files with the oracle")
    add_config_args(parser, jobs=True)
    parser.add_argument("--scenes", required=True, help="Directory of scene JSON files")
    parser.add_argument("--images", required=True, help="Directory of PPM images named after the scenes")
    parser.add_argument("--out", default="report.json", help="Report JSON")
    parser.add_argument("--csv", default=None, help="Optional per-instance CSV")
    parser.set_defaults(handler=evaluate)


@handle_errors
def evaluate(args: argparse.Namespace) -> int:
    config = run_config(args)
    report = EvaluationService(config.eval, args.jobs).evaluate_dirs(args.scenes, args.images)
    path = output_path(config, args.out)
    write_report(report, path, output_path(config, args.csv) if args.csv else None)
    echo(config, path.parent)
    return 0
