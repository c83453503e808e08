import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv

from deig.api.commands import COMMAND_MODULES
from deig.core.commons.errors import UsageError
from deig.types import ExitCode

# Load environment variables
load_dotenv()


class DeigArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting, so bad usage maps to exit code 1."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = DeigArgumentParser(prog="deig", description="Desk-scale DEIG: instance-detail layout-to-image diffusion")
    subparsers = parser.add_subparsers(dest="command", parser_class=DeigArgumentParser)
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(str(e), file=sys.stderr)
        return int(ExitCode.USAGE_ERROR)
    if getattr(args, "handler", None) is None:
        parser.print_help(sys.stderr)
        return int(ExitCode.USAGE_ERROR)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
