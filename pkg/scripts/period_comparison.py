"""Admissible speeds and optimized trajectories for adjustment periods of 60, 90 and 120 s."""

import argparse
import csv
from pathlib import Path

from uavgroup.algorithm import algorithm1
from uavgroup.cli import write_run_outputs
from uavgroup.dubins import build_plan
from uavgroup.mobility import generate_tracks
from uavgroup.scenario import default_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/periods")
    ap.add_argument("--periods", default="60,90,120")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for T in (float(t) for t in args.periods.split(",")):
        c = default_config().replace(T=T, seed=args.seed)
        track = generate_tracks(c)
        plan = build_plan(track, c)
        res = algorithm1(c, track)
        write_run_outputs(res, c, out / f"T={T:g}", track)
        for v, laps in plan.feasible_velocities:
            rows.append({"T": T, "r_I": plan.r_I, "v": v, "laps": laps, "spacing": plan.spacing,
                         "chosen": int(v == res.v_final)})
        print(f"T={T:g} s: r_I={plan.r_I:.2f} m, {len(plan.feasible_velocities)} speeds spaced "
              f"{plan.spacing:.2f} m/s, chose v={res.v_final}, eta={res.eta_final:.4e} bit/s")
    with open(out / "velocities.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
