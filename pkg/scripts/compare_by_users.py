"""Trajectory baselines and randomized schemes against the optimized design, per user count.

Writes one CSV per comparison (rows: K, kind, mean/min/max eta over seeds)
and a figure with one line per kind.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from uavgroup.algorithm import algorithm1, run_baseline_trajectory, run_scheme
from uavgroup.mobility import generate_tracks
from uavgroup.scenario import default_config
from uavgroup.svg import Series, line_chart

COMPARISONS = {
    "trajectories": {"optimized": None, "circular600": "circular600", "straight": "straight"},
    "schemes": {"scheme I": None, "scheme II": "II", "scheme III": "III"},
}


_optimized = {}


def run_kind(group: str, key, config, track):
    if key is None:
        # both comparisons start from the same optimized run
        tag = (config.K, config.seed)
        if tag not in _optimized:
            _optimized[tag] = algorithm1(config, track)
        return _optimized[tag]
    if group == "trajectories":
        return run_baseline_trajectory(config, key, track)
    return run_scheme(config, key, track)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/compare")
    ap.add_argument("--users", default="4,6,8,10")
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    users = [int(k) for k in args.users.split(",")]
    for group, kinds in COMPARISONS.items():
        table = {name: [] for name in kinds}
        rows = []
        for K in users:
            etas = {name: [] for name in kinds}
            for seed in range(args.seeds):
                c = default_config().replace(K=K, seed=seed)
                track = generate_tracks(c)
                for name, key in kinds.items():
                    res = run_kind(group, key, c, track)
                    if res.ok:
                        etas[name].append(res.eta_final)
            for name in kinds:
                e = etas[name]
                mean = float(np.mean(e)) if e else float("nan")
                table[name].append(mean)
                rows.append({"K": K, "kind": name, "mean_eta": mean,
                             "min_eta": min(e, default=float("nan")),
                             "max_eta": max(e, default=float("nan")), "n_ok": len(e)})
                print(f"{group} K={K} {name}: mean eta {mean:.4e} bit/s over {len(e)} seeds")
        with open(out / f"{group}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        series = [Series(name, [float(k) for k in users], [v / 1e6 for v in vals])
                  for name, vals in table.items()]
        (out / f"{group}.svg").write_text(
            line_chart(series, f"Max-min throughput by user count ({group})", "users K",
                       "eta (Mbit/s)"), encoding="utf-8")


if __name__ == "__main__":
    main()
