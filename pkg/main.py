#!/usr/bin/env python3

"""
The entry point of the command line.
Parse the global flags and the subcommand, configure logging and options,
then let the command manager run the requested command.
"""

import argparse
import logging
import sys

from src.constants import VERSION
from src.services.command_manager import CommandManager
from src.services.options_manager import set_option

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    """
    Return the parser of the command line: global flags followed by one subcommand.
    """
    parser = argparse.ArgumentParser(prog="tgp", description="Tucker Gaussian process regression")
    parser.add_argument("--version", action="version", version=VERSION)
    parser.add_argument("--config", help="the XML recipe of a train run")
    parser.add_argument("--seed", type=int, help="override the seed of the recipe")
    parser.add_argument("--data-dir", help="the directory relative dataset paths are read from")
    parser.add_argument("--out-dir", help="the directory outputs are written to")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="train the model of a recipe")
    train.add_argument("recipe", nargs="?", help="the XML recipe, --config when omitted")

    evaluate = commands.add_parser("eval", help="score a saved model on held-out data")
    evaluate.add_argument("model", help="the model file")
    evaluate.add_argument("data", help="the held-out data file")
    evaluate.add_argument("--clip", action="store_true", help="clip predicted ratings to the rating range")

    predict = commands.add_parser("predict", help="predict new inputs with a saved model")
    predict.add_argument("model", help="the model file")
    predict.add_argument("data", help="the input file")

    decompose = commands.add_parser("decompose", help="map the additive components of a two-mode model")
    decompose.add_argument("model", help="the model file")
    decompose.add_argument("--grid", required=True, help="the grid, as x0:x1:nx,y0:y1:ny")
    decompose.add_argument("--formats", default="csv,pgm", help="comma-separated among csv, pgm and png")
    decompose.add_argument(
        "--shading", default="percentile", help="grey levels by percentile rank or uniform between min and max"
    )

    diagnose = commands.add_parser("diagnose", help="convergence diagnostics of saved chains")
    diagnose.add_argument("chains", help="a chains file or a sampled model file")

    bench = commands.add_parser("bench", help="time minibatch gradients")
    bench.add_argument("--sweep", help="the swept sizes, as m=100,1000;n=50;r=5;D=2")
    bench.add_argument("--repeats", type=int, help="the timed repetitions of every size")
    return parser


def main(argv=None) -> int:
    arguments = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if arguments.quiet else logging.INFO, format=LOG_FORMAT)
    if arguments.data_dir:
        set_option("data_dir", arguments.data_dir)
    if arguments.out_dir:
        set_option("out_dir", arguments.out_dir)
    if arguments.seed is not None:
        set_option("seed", arguments.seed)
    set_option("quiet", arguments.quiet)
    return CommandManager(arguments).execute()


if __name__ == "__main__":
    sys.exit(main())
