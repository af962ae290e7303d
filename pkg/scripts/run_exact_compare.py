"""Quadratic fits against a golden-section baseline on one frozen batch.

Runs every approximation kind plus an exact univariate solve on the same
pinned mini-batch, logging errors every iteration. Extra flags pass through:

    python scripts/run_exact_compare.py --iterations 100 --kinds gg,fgf
"""

import sys

from quadls.cli import main

if __name__ == "__main__":
    sys.exit(main(["compare-exact", "--out-dir", "results/exact_compare"]
                  + sys.argv[1:]))
