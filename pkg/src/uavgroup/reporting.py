"""CSV artifacts of runs and sweeps, and the SVG figures derived from them."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .algorithm import IterationTrace, RunResult
from .mobility import UserTrack, load_track_csv
from .svg import Series, line_chart

TRACE_FIELDS = ["l", "eta_sched", "eta_res", "eta_traj", "v"]
SWEEP_FIELDS = ["value", "mean_eta", "min_eta", "max_eta", "n_ok", "status"]


def _num(text: str) -> float:
    return float(text) if text != "" else math.nan


def write_trace_csv(trace: IterationTrace, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_FIELDS)
        for r in trace.records:
            w.writerow([r.l, repr(r.eta_sched), repr(r.eta_res), repr(r.eta_traj), repr(r.v)])


def read_trace_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{"l": int(r["l"]), **{k: _num(r[k]) for k in TRACE_FIELDS[1:]}} for r in rows]


def write_positions_csv(q: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "x", "y"])
        for n, (x, y) in enumerate(np.asarray(q, dtype=float), start=1):
            w.writerow([n, repr(float(x)), repr(float(y))])


def read_positions_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["n"]))
    return np.array([[float(r["x"]), float(r["y"])] for r in rows])


def write_sweep_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in SWEEP_FIELDS})


def read_sweep_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{"value": r["value"], "mean_eta": _num(r["mean_eta"]), "min_eta": _num(r["min_eta"]),
             "max_eta": _num(r["max_eta"]), "n_ok": int(r["n_ok"]), "status": r["status"]}
            for r in rows]


def convergence_svg(rows: list[dict]) -> str:
    ls = [float(r["l"]) for r in rows]
    series = [Series("after scheduling", ls, [r["eta_sched"] / 1e6 for r in rows]),
              Series("after resources", ls, [r["eta_res"] / 1e6 for r in rows]),
              Series("after trajectory", ls, [r["eta_traj"] / 1e6 for r in rows])]
    return line_chart(series, "Max-min throughput per outer iteration", "iteration l",
                      "eta (Mbit/s)")


def trajectory_svg(q: np.ndarray, track: UserTrack) -> str:
    series = [Series("UAV", list(q[:, 0]), list(q[:, 1]), markers=False, width=1.0)]
    for k in range(track.K):
        pos = track.positions[k]
        series.append(Series(f"user {k + 1}", list(pos[:, 0]), list(pos[:, 1]), markers=False))
    c = track.centroids
    series.append(Series("centroid", list(c[:, 0]), list(c[:, 1]), markers=False, width=2.5))
    return line_chart(series, "UAV trajectory and user tracks", "x (m)", "y (m)", equal_aspect=True)


def sweep_svg(rows: list[dict], param: str) -> str:
    labels = [r["value"] for r in rows]
    try:
        xs = [float(v) for v in labels]
        ticks = None
    except ValueError:
        xs = [float(i) for i in range(len(labels))]
        ticks = labels
    series = [Series("mean", xs, [r["mean_eta"] / 1e6 for r in rows]),
              Series("min", xs, [r["min_eta"] / 1e6 for r in rows], markers=False, width=1.0),
              Series("max", xs, [r["max_eta"] / 1e6 for r in rows], markers=False, width=1.0)]
    return line_chart(series, f"Max-min throughput versus {param}", param, "eta (Mbit/s)",
                      xticklabels=ticks)


RUN_FILES = {"result": "result.json", "trace": "trace.csv", "trajectory": "trajectory.csv",
             "tracks": "tracks.csv", "convergence_svg": "convergence.svg",
             "trajectory_svg": "trajectory.svg"}


def render_run_dir(out: Path) -> list[Path]:
    """Write the run SVGs from the CSVs found in ``out``."""
    written = []
    trace = out / RUN_FILES["trace"]
    if trace.exists():
        path = out / RUN_FILES["convergence_svg"]
        path.write_text(convergence_svg(read_trace_csv(trace)), encoding="utf-8")
        written.append(path)
    traj, tracks = out / RUN_FILES["trajectory"], out / RUN_FILES["tracks"]
    if traj.exists() and tracks.exists():
        path = out / RUN_FILES["trajectory_svg"]
        path.write_text(trajectory_svg(read_positions_csv(traj), load_track_csv(tracks)),
                        encoding="utf-8")
        written.append(path)
    return written


def render_sweep_dir(out: Path) -> list[Path]:
    written = []
    for csv_path in sorted(out.glob("sweep_*.csv")):
        param = csv_path.stem[len("sweep_"):]
        path = csv_path.with_suffix(".svg")
        path.write_text(sweep_svg(read_sweep_csv(csv_path), param), encoding="utf-8")
        written.append(path)
    return written


def summarize_point(value: str, results: list[RunResult]) -> dict:
    etas = [r.eta_final for r in results if r.ok]
    failed = len(results) - len(etas)
    status = "ok" if not failed else f"failed {failed}/{len(results)}"
    if not etas:
        return {"value": value, "mean_eta": math.nan, "min_eta": math.nan, "max_eta": math.nan,
                "n_ok": 0, "status": status}
    return {"value": value, "mean_eta": float(np.mean(etas)), "min_eta": float(min(etas)),
            "max_eta": float(max(etas)), "n_ok": len(etas), "status": status}
