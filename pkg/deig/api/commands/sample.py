import argparse

from deig.api.commands.common import add_config_args, output_path, run_config
from deig.api.middleware.error_handler import handle_errors
from deig.core.commons.logger import get_logger
from deig.core.synth.io import condition_from_file, read_scene_file, write_ppm
from deig.models.deig_model import load_model
from deig.services.sampling.main import SamplingService

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("sample", help="Generate an image for a scene file")
    add_config_args(parser)
    parser.add_argument("--ckpt", required=True, help="Checkpoint written by train")
    parser.add_argument("--scene", required=True, help="Scene JSON")
    parser.add_argument("--seed", type=int, default=0, help="Sampling seed (u64)")
    parser.add_argument("--out", required=True, help="Output PPM")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar")
    parser.set_defaults(handler=sample)


@handle_errors
def sample(args: argparse.Namespace) -> int:
    config = run_config(args)
    cond = condition_from_file(read_scene_file(args.scene))
    model, encoder = load_model(args.ckpt, config if args.config else None)
    image = SamplingService(model, encoder).sample(cond, args.seed, progress=args.progress)
    path = write_ppm(output_path(config, args.out), image)
    logger.info(f"Wrote {path}")
    return 0
