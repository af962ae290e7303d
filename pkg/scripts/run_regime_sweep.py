"""Convergence sweep recipe for one step-bound regime.

Picks the regime, then hands every remaining flag straight to the sweep
subcommand, so any of its options can be appended:

    python scripts/run_regime_sweep.py bounded --seeds 0,1,2 --workers 4
    python scripts/run_regime_sweep.py no-bounds --dataset mnist
    python scripts/run_regime_sweep.py fixed-batch --kinds gg,fgf
"""

import sys

from quadls.cli import main
from quadls.harness import REGIMES

if __name__ == "__main__":
    if len(sys.argv) < 2 or sys.argv[1] not in REGIMES:
        print(f"usage: run_regime_sweep.py {{{','.join(REGIMES)}}} [sweep flags]",
              file=sys.stderr)
        sys.exit(2)
    regime = sys.argv[1]
    sys.exit(main(["sweep", "--regime", regime, "--out-dir",
                   f"results/sweep_{regime}"] + sys.argv[2:]))
