"""DNN-D, DNN, 1DCNN-D and 1DCNN over several seeds; prints mean ± std and the
train/test generalization gap for each variant.

    python scripts/run_ablation.py [--seeds 5] [--jobs 4]
"""

import sys
from pathlib import Path

from tannin.cli import main

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--seeds" not in args:
        args += ["--seeds", "5"]
    if "--out" not in args:
        args += ["--out", "runs/ablate"]
    sys.exit(main(["ablate", "--config", str(CONFIG), *args]))
