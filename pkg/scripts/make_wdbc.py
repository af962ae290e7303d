"""Materialize the diagnostic breast-cancer table as data/wdbc.data.

Writes the 569-row UCI-format CSV (id, M/B diagnosis, 30 features) that the
wdbc dataset loader expects. Needs scikit-learn, which ships with the test
extra: pip install -e ".[test]" --no-build-isolation
"""

import argparse
import os
import sys

from quadls.dataio import write_wdbc_csv


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="data",
                        help="directory to write wdbc.data into")
    args = parser.parse_args(argv)
    try:
        from sklearn.datasets import load_breast_cancer
    except ImportError:
        print("error: scikit-learn is required; install the test extra",
              file=sys.stderr)
        return 2
    bundle = load_breast_cancer()
    letters = ["M" if t == 0 else "B" for t in bundle.target]
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "wdbc.data")
    write_wdbc_csv(path, bundle.data, letters)
    print(f"wrote {len(letters)} rows to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
