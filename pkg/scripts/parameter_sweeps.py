"""Max-min throughput against transmit power, user count and group speed."""

import argparse

from uavgroup.cli import main as cli

SWEEPS = {
    "Pmax": "0.25,0.5,1,2",
    "K": "4,6,8,10",
    "Ve": "0,2.5,5,10,15",
}

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/sweeps")
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", choices=sorted(SWEEPS))
    args = ap.parse_args()
    for param, values in SWEEPS.items():
        if args.only and param != args.only:
            continue
        cli(["sweep", "--out", f"{args.out}/{param}", "--param", param, "--values", values,
             "--reps", str(args.reps), "--jobs", str(args.jobs)])
