"""Correlation heatmap, PCA importance and Shapiro-Wilk tests on the red-wine data.

    python scripts/run_analysis.py [--out runs/analysis]
"""

import sys
from pathlib import Path

from tannin.cli import main

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "runs/analysis"]
    sys.exit(main(["analyze", "--config", str(CONFIG), *args]))
