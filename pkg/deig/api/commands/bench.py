import argparse

from deig.api.commands.common import add_config_args, echo, output_path, run_config
from deig.api.middleware.error_handler import handle_errors
from deig.core.commons.errors import UsageError
from deig.core.commons.logger import get_logger
from deig.services.bench.main import BenchService

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen-bench", help="Generate a synthetic scene set")
    add_config_args(parser, jobs=True)
    parser.add_argument("--seed", type=int, default=None, help="Scene seed (default: config seed)")
    parser.add_argument("--count", type=int, default=None, help="Scene count (default: bench.count)")
    parser.add_argument("--out", default="bench", help="Output directory")
    parser.set_defaults(handler=gen_bench)


@handle_errors
def gen_bench(args: argparse.Namespace) -> int:
    config = run_config(args)
    count = args.count if args.count is not None else config.bench.count
    if count < 1:
        raise UsageError("--count must be at least 1")
    seed = config.seed if args.seed is None else args.seed
    out_dir = output_path(config, args.out)
    service = BenchService(config)
    manifest = service.write(service.generate(seed, count, jobs=args.jobs), out_dir, seed)
    echo(config, out_dir)
    logger.info(f"Generated {manifest.count} scenes in {out_dir}")
    return 0
