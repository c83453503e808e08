import argparse
from pathlib import Path
from typing import Optional, Union

from deig.config.settings import RunConfig, echo_config, load_config
from deig.core.commons.utils import resolve_output


def add_config_args(parser: argparse.ArgumentParser, jobs: bool = False) -> None:
    parser.add_argument("--config", default=None, help="JSON run config (missing keys take defaults)")
    parser.add_argument("--output-dir", default=None, help="Overrides the config's output_dir")
    if jobs:
        parser.add_argument("--jobs", type=int, default=1, help="Worker threads")


def run_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(getattr(args, "config", None))
    output_dir = getattr(args, "output_dir", None)
    if output_dir:
        config = config.model_copy(update={"output_dir": output_dir})
    return config


def output_path(config: RunConfig, path: Union[str, Path]) -> Path:
    """Artifact path resolved against the run's output directory."""
    return resolve_output(path, config.output_dir)


def echo(config: RunConfig, directory: Optional[Union[str, Path]] = None) -> Path:
    return echo_config(config, directory or config.output_dir)
