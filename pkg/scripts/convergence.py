"""One optimized run on the default scenario: trace, trajectory and both figures."""

import argparse
import sys

from uavgroup.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sys.exit(main(["run", "--out", args.out, "--seed", str(args.seed)]))
