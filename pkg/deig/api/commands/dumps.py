import argparse

from deig.api.commands.common import add_config_args, output_path, run_config
from deig.api.middleware.error_handler import handle_errors
from deig.core.synth.io import condition_from_file, read_scene_file
from deig.models.deig_model import load_model
from deig.services.diagnostics.dumps import dump_attention, dump_mask


def register(subparsers) -> None:
    mask = subparsers.add_parser("dump-mask", help="Write a scene's instance mask as PGM + JSON")
    add_config_args(mask)
    mask.add_argument("--scene", required=True, help="Scene JSON")
    mask.add_argument("--level", type=int, default=0, choices=[0, 1], help="0 full grid, 1 merged grid")
    mask.add_argument("--out", default="mask", help="Output path prefix")
    mask.set_defaults(handler=dump_mask_command)

    attn = subparsers.add_parser("dump-attn", help="Write IDE and DFM attention maps as CSV")
    add_config_args(attn)
    attn.add_argument("--ckpt", required=True, help="Checkpoint written by train")
    attn.add_argument("--scene", required=True, help="Scene JSON")
    attn.add_argument("--layer", type=int, default=0, help="IDE layer / backbone block index")
    attn.add_argument("--t", type=int, default=0, help="Timestep")
    attn.add_argument("--seed", type=int, default=0, help="Seed of the noisy latent")
    attn.add_argument("--out", default="attn", help="Output directory")
    attn.set_defaults(handler=dump_attn_command)


@handle_errors
def dump_mask_command(args: argparse.Namespace) -> int:
    config = run_config(args)
    cond = condition_from_file(read_scene_file(args.scene))
    dump_mask(cond, config, output_path(config, args.out), args.level)
    return 0


@handle_errors
def dump_attn_command(args: argparse.Namespace) -> int:
    config = run_config(args)
    cond = condition_from_file(read_scene_file(args.scene))
    model, encoder = load_model(args.ckpt, config if args.config else None)
    dump_attention(model, encoder, cond, output_path(config, args.out), args.layer, args.t, args.seed)
    return 0
