"""Command-line entry point: ``tannin {analyze,train,compare,ablate}``.

Exit codes: 0 success, 2 config error, 3 data error, 4 training failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .data import DataError
from .experiments import ExperimentError, run_ablate, run_analyze, run_compare, run_train
from .nn.model import VARIANTS
from .nn.train import TrainingError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_TRAIN = 0, 2, 3, 4

log = logging.getLogger("tannin")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON experiment config")
    common.add_argument("--data", help="wine-quality CSV (default: $TANNIN_DATA, then bundled red wine)")
    common.add_argument("--seed", type=int, help="global seed (overrides config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes for independent models")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tannin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="correlation heatmap, PCA importance, Shapiro-Wilk")
    t = sub.add_parser("train", parents=[common], help="train one network variant")
    t.add_argument("--variant", choices=VARIANTS)
    sub.add_parser("compare", parents=[common], help="kNN, SVM, LR, RF and 1DCNN on one split")
    a = sub.add_parser("ablate", parents=[common], help="DNN-D, DNN, 1DCNN-D, 1DCNN on one split")
    a.add_argument("--seeds", type=int, help="runs per variant; reports mean ± std")
    return p


COMMANDS = {"analyze": run_analyze, "train": run_train, "compare": run_compare, "ablate": run_ablate}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {
        "data": args.data,
        "seed": args.seed,
        "out": args.out,
        "jobs": args.jobs,
        "variant": getattr(args, "variant", None),
        "seeds": getattr(args, "seeds", None),
    }
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"tannin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = COMMANDS[args.command](cfg)
    except (DataError, OSError) as exc:
        print(f"tannin: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ExperimentError, TrainingError) as exc:
        print(f"tannin: training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except ValueError as exc:
        # statistics on degenerate data (zero variance, too few rows)
        print(f"tannin: data error: {exc}", file=sys.stderr)
        return EXIT_DATA

    if "table" in result:
        print(result["table"], end="")
    elif args.command == "train":
        m = result["manifest"]["models"][cfg.variant]
        print(f"{cfg.variant}: test accuracy {m['test_accuracy']:.3f}, macro F1 {m['metrics']['f1']:.3f}")
    else:
        for name, rho in result["summary"]["correlation_with_quality"].items():
            print(f"{name:>22s}  {rho:+.3f}")
    print(f"outputs written to {cfg.out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
