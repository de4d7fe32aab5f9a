"""Command-line entry point: ``mesoecho {simulate,sweep,two-spin,plot}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import BACKEND, __version__
from .config import load_config
from .errors import MesoechoError
from .lattice import DEFAULT_DIM_CAP
from . import pipeline

log = logging.getLogger("mesoecho")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text, 0)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesoecho",
        description="Polarization echoes and decoherence rates in a two-leg XY spin ladder.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="INI configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=_u64, help="override the configured seed")
        p.add_argument("--cap-dim", type=_positive, default=DEFAULT_DIM_CAP,
                       help="largest Hilbert-space dimension allowed (default 2^24)")

    common(sub.add_parser("simulate", help="autocorrelation trace for one ladder"))
    p = sub.add_parser("sweep", help="J_y x interaction-type sweep with decoherence fits")
    common(p)
    p.add_argument("--workers", type=_positive, help="worker processes (overrides [sweep] workers)")
    common(sub.add_parser("two-spin", help="closed-form vs numeric two-spin channel"))

    p = sub.add_parser("plot", help="render a CSV produced by another command as SVG")
    p.add_argument("--csv", required=True, help="trace, fgr_report or two_spin CSV")
    p.add_argument("--kind", choices=("auto", "trace", "fgr", "two-spin"), default="auto")
    p.add_argument("--out", help="SVG file or directory (default: next to the CSV)")
    p.add_argument("--config", help="accepted for symmetry with other commands; unused")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "plot":
            target = pipeline.cmd_plot(args.csv, args.kind, args.out)
        else:
            config = load_config(args.config)
            log.info("loaded %s", args.config)
            if args.command == "simulate":
                target = pipeline.cmd_simulate(config, args.out, args.seed, args.cap_dim)
            elif args.command == "sweep":
                target = pipeline.cmd_sweep(config, args.out, args.seed, args.cap_dim, args.workers)
            else:
                target = pipeline.cmd_two_spin(config, args.out, args.seed)
    except MesoechoError as exc:
        print(f"mesoecho: error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(target)
    return 0


if __name__ == "__main__":
    sys.exit(main())
