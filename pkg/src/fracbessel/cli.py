"""Command-line entry point: ``fracbessel <mode> [flags]``."""

import argparse
import logging
import sys

from .config import MODES, parse_config
from .errors import ConfigError, FracBesselError, NumericError
from .runner import run

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values[0] if len(values) == 1 else values


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file; flags override it")
    common.add_argument("--x0", type=float)
    common.add_argument("--a", type=_float_list, help="drift; comma list for sweep-a and figures")
    common.add_argument("--sigma", type=float)
    common.add_argument("--hurst", type=float)
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--epsilon", type=_float_list, help="finest regularization; comma list for sweep-eps")
    common.add_argument("--eps-ratio", dest="eps_ratio", type=float)
    common.add_argument("--eps-levels", dest="eps_levels", type=int)
    common.add_argument("--tol-limit", dest="tol_limit", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--paths", type=int)
    common.add_argument("--out")
    common.add_argument("--zero-noise", dest="zero_noise", action="store_true", default=None,
                        help="replace the fBm sample by zeros")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="fracbessel",
        description="Simulate reflected fractional Bessel-type diffusions.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sub.add_parser(mode, parents=[common])
    return parser


def main(argv=None):
    args = vars(build_parser().parse_args(argv))
    logging.basicConfig(level=logging.INFO if args.pop("verbose") else logging.WARNING)
    source = args.pop("config")
    try:
        config = parse_config(source, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run(config)
    except NumericError as exc:
        print(f"numeric error at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FracBesselError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
