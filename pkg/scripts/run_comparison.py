"""kNN, SVM, LR, RF and 1DCNN on one shared 80/20 stratified split.

    python scripts/run_comparison.py [--seed 42] [--jobs 4]
"""

import sys
from pathlib import Path

from tannin.cli import main

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "runs/compare"]
    sys.exit(main(["compare", "--config", str(CONFIG), *args]))
