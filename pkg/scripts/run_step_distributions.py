"""Step-size distribution study recipe.

Fits every approximation kind repeatedly at one seeded start point over
independently drawn mini-batches, across a range of batch sizes, and writes
per-setting stats and histogram CSVs. Extra study flags pass through:

    python scripts/run_step_distributions.py --batch-sizes 10,100 --n-fits 500
"""

import sys

from quadls.cli import main

if __name__ == "__main__":
    sys.exit(main(["study", "--out-dir", "results/distributions"]
                  + sys.argv[1:]))
