"""
Command-line interface for the sign-pose GAN: synth | train | generate | eval | ablate
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.config import RunConfig
from src.errors import SignPoseError, TrainingDivergedError
from src.pipelines.commands import cmd_ablate, cmd_eval, cmd_generate, cmd_synth, cmd_train
from src.utils.logging_setup import configure_logging

logger = logging.getLogger("src.cli")

CHANNEL_CHOICES = ["manual", "nonmanual", "both"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_pipeline.py",
        description="Adversarial multi-channel sign-pose production on a synthetic corpus",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run config (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--lambda-gan", type=float, dest="lambda_gan", help="override λ_GAN")
    common.add_argument("--channels", choices=CHANNEL_CHOICES, help="pose channels used by the model")
    common.add_argument("--out", help="output location (directory, or file for generate)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write the synthetic corpus")
    sub.add_parser("train", parents=[common], help="train on the train split")

    generate = sub.add_parser("generate", parents=[common], help="produce poses for tokens")
    generate.add_argument("tokens", help="space separated tokens, or a file with one sequence per line")
    generate.add_argument("--checkpoint", help="checkpoint file (default: the run's final checkpoint)")
    generate.add_argument("--frames", type=int, default=8, help="frames drawn in the SVG strip")

    evaluate = sub.add_parser("eval", parents=[common], help="back-translation scores")
    evaluate.add_argument("--checkpoint", help="checkpoint file (default: the run's final checkpoint)")
    evaluate.add_argument("--split", choices=["train", "dev", "test"])
    evaluate.add_argument("--passthrough", action="store_true", help="score ground-truth poses")

    ablate = sub.add_parser("ablate", parents=[common], help="regression vs adversarial and channel ablations")
    ablate.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    ablate.add_argument("--groups", nargs="+", choices=["adversarial", "channels"],
                        default=["adversarial", "channels"])
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    return config.with_overrides(seed=args.seed, lambda_gan=args.lambda_gan, channels=args.channels)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()

    try:
        config = load_config(args)
        if args.command == "synth":
            cmd_synth(config, args.out)
        elif args.command == "train":
            cmd_train(config, args.out)
        elif args.command == "generate":
            out = args.out or "generated.txt"
            cmd_generate(config, args.tokens, out, args.checkpoint, args.frames)
        elif args.command == "eval":
            cmd_eval(config, args.checkpoint, args.split, args.out, args.passthrough or None)
        elif args.command == "ablate":
            cmd_ablate(config, args.seeds, args.out, args.groups)
    except TrainingDivergedError as e:
        logger.error(f"❌ Training diverged: {e}")
        return 2
    except SignPoseError as e:
        logger.error(f"❌ {e}")
        return 1
    except OSError as e:
        where = f": {e.filename}" if getattr(e, "filename", None) else ""
        logger.error(f"❌ {e.strerror or e}{where}")
        return 1
    except ValueError as e:
        # pydantic validation and config parsing
        logger.error(f"❌ Invalid configuration: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
