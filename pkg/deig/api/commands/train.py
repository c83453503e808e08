import argparse

from deig.api.commands.common import add_config_args, echo, output_path, run_config
from deig.api.middleware.error_handler import handle_errors
from deig.services.training.main import TrainingService


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="Pretrain the backbone, then train IDE and DFM")
    add_config_args(parser)
    parser.add_argument("--out", default="model.ckpt", help="Checkpoint path")
    parser.set_defaults(handler=train)


@handle_errors
def train(args: argparse.Namespace) -> int:
    config = run_config(args)
    checkpoint = output_path(config, args.out)
    echo(config, checkpoint.parent)
    TrainingService(config).train(checkpoint)
    return 0
