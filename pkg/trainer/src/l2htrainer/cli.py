"""Command-line entry points: train a translator, run inference."""

import argparse
import sys

from .config import ConfigError, TranslatorConfig, full_scale_config
from .infer import run_inference
from .rawdata import DataFormatError
from .train import TrainingDiverged, train

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="l2h", description="Low-to-high quality B-mode translator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a translator")
    p_train.add_argument("--data", required=True, help="dataset root")
    p_train.add_argument("--out", required=True, help="checkpoint directory")
    p_train.add_argument("--config", help="YAML config file")
    p_train.add_argument("--variant", choices=("M", "MS", "MSA"))
    p_train.add_argument("--iterations", type=int)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--full-scale", action="store_true",
                         help="use the published full-scale recipe")
    p_train.add_argument("--quiet", action="store_true")

    p_infer = sub.add_parser("infer", help="translate a dataset split")
    p_infer.add_argument("--checkpoint", required=True)
    p_infer.add_argument("--data", required=True, help="dataset root")
    p_infer.add_argument("--out", required=True, help="prediction directory")
    p_infer.add_argument("--split", default="eval")
    return parser


def _train_config(args):
    if args.full_scale:
        config = full_scale_config(args.variant or "MSA")
    elif args.config:
        config = TranslatorConfig.load(args.config)
    else:
        config = TranslatorConfig()
    overrides = {}
    if args.variant:
        overrides["variant"] = args.variant
    if args.iterations is not None:
        overrides["max_iterations"] = args.iterations
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = TranslatorConfig.from_dict({**config.as_dict(), **overrides})
    return config


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            config = _train_config(args)
            _, state = train(config, args.data, args.out, quiet=args.quiet)
            print(f"trained {config.variant} for {state.iteration} iterations "
                  f"-> {args.out}/final.pt")
        elif args.command == "infer":
            written = run_inference(args.checkpoint, args.data, args.out,
                                    split=args.split)
            print(f"wrote {len(written)} predictions to {args.out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, TrainingDiverged, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
