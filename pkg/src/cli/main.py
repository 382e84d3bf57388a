"""celf: simulate, recover, train and evaluate coded-aperture event light-field capture"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from src.cli import commands
from src.config.logging_config import setup_logging
from src.config.settings import DATA_DIR, LOG_LEVEL
from src.utils.mode_resolver import CANONICAL_MODES
from src.utils.validators import UsageError

logger = logging.getLogger(__name__)

EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _add_sensor_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sensor")
    g.add_argument("--tau", type=float, default=None, help="contrast threshold (default 0.30)")
    g.add_argument("--epsilon", type=float, default=None, help="log offset (default 0.01)")
    g.add_argument("--sigma_w", type=float, default=None, help="log-intensity noise std (default 0.175)")
    g.add_argument("--sigma_z", type=float, default=None, help="threshold noise std (default 0.04)")
    g.add_argument("--seed", type=int, default=None, help="seed for every stochastic step (default 0)")
    g.add_argument("--noiseless", action="store_const", const=True, default=None, help="disable sensor noise")
    g.add_argument("--config", default=None, help="key=value configuration file; flags win")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--N", type=int, default=None, help="number of coding patterns (default 4)")
    g.add_argument("--epochs", type=int, default=None)
    g.add_argument("--batch_size", type=int, default=None)
    g.add_argument("--mode", default=None, help=f"one of {', '.join(CANONICAL_MODES)}")
    g.add_argument("--lr", type=float, default=None)
    g.add_argument("--s_init", type=float, default=None)
    g.add_argument("--s_growth", type=float, default=None)
    g.add_argument("--depth", type=int, default=None, help="conv layers in the reconstruction network")
    g.add_argument("--width", type=int, default=None, help="hidden channels in the reconstruction network")
    g.add_argument("--val_fraction", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="celf", description=__doc__)
    parser.add_argument("--log-level", default=LOG_LEVEL, help="logging level (env CELF_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="coded images -> event images")
    p.add_argument("--lightfield", required=True, help="CELF-LF4 file or view-PNG directory")
    p.add_argument("--patterns", required=True, help="CELF-AP1 pattern file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--event-model", dest="event_model", choices=["baseline", "ra"], default="ra")
    p.add_argument("--ref-init", dest="ref_init", choices=["black", "first"], default="black")
    p.add_argument("--stream", action="store_true", help="also write an expanded CELF-EV1 stream")
    p.add_argument("--window", type=int, default=1000, help="stream time window per transition")
    _add_sensor_flags(p)
    p.set_defaults(handler=commands.cmd_simulate)

    p = sub.add_parser("recover", help="event images around a black pattern -> coded intensities")
    p.add_argument("--events", required=True, help="directory of events_XX.ei1 files")
    p.add_argument("--black-index", dest="black_index", type=int, default=None, help="1-based black pattern")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", default=None, help="ground-truth light field for the residual report")
    p.add_argument("--patterns", default=None, help="patterns used to form the ground-truth coded images")
    _add_sensor_flags(p)
    p.set_defaults(handler=commands.cmd_recover)

    p = sub.add_parser("train", help="jointly optimize patterns and the reconstruction network")
    p.add_argument("--data", default=None, help=f"dataset directory (default {DATA_DIR})")
    p.add_argument("--synthetic", type=int, default=0, help="train on this many generated fields instead")
    p.add_argument("--size", type=int, default=32, help="side of generated fields")
    p.add_argument("--layers", type=int, default=3, help="depth layers of generated fields")
    p.add_argument("--patch-size", dest="patch_size", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--quiet", action="store_true", help="no progress bar")
    _add_train_flags(p)
    _add_sensor_flags(p)
    p.set_defaults(handler=commands.cmd_train)

    p = sub.add_parser("eval", help="reconstruct held-out fields from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", default=None, help=f"held-out dataset directory (default {DATA_DIR})")
    p.add_argument("--train-data", dest="train_data", default=None, help="training set for the constant baseline")
    p.add_argument("--event-model", dest="event_model", choices=["baseline", "ra"], default=None,
                   help="re-simulate under this event model instead of the trained one")
    p.add_argument("--binary", action="store_true", help="use the binarized patterns")
    p.add_argument("--out", required=True)
    _add_sensor_flags(p)
    p.set_defaults(handler=commands.cmd_eval)

    p = sub.add_parser("make-synthetic", help="write a dataset of layered synthetic light fields")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--disparities", default=None, help="comma-separated integer disparity per layer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-png", dest="no_png", action="store_true", help="skip the per-view PNGs")
    p.set_defaults(handler=commands.cmd_make_synthetic)

    p = sub.add_parser("info", help="formats, versions and default configuration")
    p.add_argument("files", nargs="*", help="files to identify")
    p.set_defaults(handler=commands.cmd_info)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        return args.handler(args)
    except (UsageError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, RuntimeError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
