import argparse

from deig.api.commands.common import add_config_args, echo, run_config
from deig.api.middleware.error_handler import handle_errors
from deig.services.ablation.main import AblationService
from deig.types import AblationKind


def register(subparsers) -> None:
    parser = subparsers.add_parser("ablate", help="Train and evaluate the arms of one ablation")
    add_config_args(parser, jobs=True)
    parser.add_argument("--what", required=True, choices=[kind.value for kind in AblationKind])
    parser.set_defaults(handler=ablate)


@handle_errors
def ablate(args: argparse.Namespace) -> int:
    config = run_config(args)
    echo(config)
    AblationService(config, args.jobs).run(AblationKind(args.what), config.output_dir)
    return 0
