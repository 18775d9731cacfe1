"""Command-line entry point: ``run``, ``sweep`` and ``plot``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .algorithm import RunResult, algorithm1, run_baseline_trajectory, run_scheme
from .mobility import generate_tracks, save_track_csv
from .reporting import (RUN_FILES, render_run_dir, render_sweep_dir, summarize_point,
                        write_positions_csv, write_sweep_csv, write_trace_csv)
from .scenario import (ConfigParseError, ConfigValidationError, ScenarioConfig, config_from_pairs,
                       load_config, parse_assignment, default_config, save_config)

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2
SWEEP_PARAMS = ("T", "Pmax", "K", "Ve", "scheme", "baseline")
SCHEMES = ("I", "II", "III")
BASELINES = ("optimized", "circular600", "straight")



class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple[str, ...]
    repetitions: int = 1

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise UsageError(f"cannot sweep {self.param!r}; choose from {', '.join(SWEEP_PARAMS)}")
        if not self.values:
            raise UsageError("sweep needs at least one value")
        if self.repetitions < 1:
            raise UsageError("repetitions must be at least 1")
        allowed = {"scheme": SCHEMES, "baseline": BASELINES}.get(self.param)
        for v in self.values:
            if allowed is not None and v not in allowed:
                raise UsageError(f"{self.param} value {v!r} not in {allowed}")


def build_config(args) -> ScenarioConfig:
    """Config file (or defaults), then --set overrides, then --seed."""
    try:
        base = load_config(args.config) if args.config else default_config()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    pairs = {}
    for item in args.set or []:
        key, value = parse_assignment(item)
        pairs[key] = value
    if args.seed is not None:
        pairs["seed"] = args.seed
    return config_from_pairs(pairs, base) if pairs else base


def point_config(config: ScenarioConfig, param: str, value: str, rep: int) -> ScenarioConfig:
    cfg = config.replace(seed=config.seed + rep)
    if param in ("scheme", "baseline"):
        return cfg
    key, parsed = parse_assignment(f"{param}={value}")
    return config_from_pairs({key: parsed}, cfg)


def run_point(config: ScenarioConfig, param: str, value: str) -> RunResult:
    if param == "scheme":
        return run_scheme(config, value)
    if param == "baseline":
        return run_baseline_trajectory(config, value)
    return algorithm1(config)


def write_run_outputs(result: RunResult, config: ScenarioConfig, out: Path, track=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    result.save(out / RUN_FILES["result"])
    write_trace_csv(result.trace, out / RUN_FILES["trace"])
    if result.q is not None and result.ok:
        write_positions_csv(result.q, out / RUN_FILES["trajectory"])
    save_track_csv(track if track is not None else generate_tracks(config), out / RUN_FILES["tracks"])
    save_config(config, out / "config.txt")
    render_run_dir(out)


def cmd_run(args) -> int:
    config = build_config(args)
    out = Path(args.out)
    track = generate_tracks(config)
    result = algorithm1(config, track)
    write_run_outputs(result, config, out, track)
    if not result.ok:
        print(f"infeasible scenario ({result.failed_block} block): {result.message}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"eta = {result.eta_final:.6e} bit/s after {result.iterations} iterations, "
          f"v = {result.v_final:.4f} m/s, outputs in {out}")
    return EXIT_OK


def _sweep_job(job):
    config, param, value, rep, point_dir = job
    cfg = point_config(config, param, value, rep)
    result = run_point(cfg, param, value)
    write_run_outputs(result, cfg, Path(point_dir))
    return value, result


def cmd_sweep(args) -> int:
    config = build_config(args)
    values = tuple(v.strip() for v in (args.values or "").split(",") if v.strip())
    spec = SweepSpec(args.param, values, args.reps)
    for v in spec.values:
        point_config(config, spec.param, v, 0)
    out = Path(args.out)
    jobs = [(config, spec.param, v, rep, str(out / "points" / f"{spec.param}={v}" / f"rep{rep}"))
            for v in spec.values for rep in range(spec.repetitions)]
    out.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_sweep_job, jobs))
    else:
        done = [_sweep_job(j) for j in jobs]
    rows = []
    for v in spec.values:
        rows.append(summarize_point(v, [r for val, r in done if val == v]))
    write_sweep_csv(rows, out / f"sweep_{spec.param}.csv")
    render_sweep_dir(out)
    for r in rows:
        print(f"{spec.param}={r['value']}: mean eta {r['mean_eta']:.6e} bit/s ({r['status']})")
    return EXIT_OK if any(r["n_ok"] for r in rows) else EXIT_INFEASIBLE


def cmd_plot(args) -> int:
    root = Path(args.out)
    if not root.is_dir():
        raise UsageError(f"{root} is not a directory")
    written = render_run_dir(root) + render_sweep_dir(root)
    if not written:
        raise UsageError(f"{root}: no {RUN_FILES['trace']}, {RUN_FILES['trajectory']} "
                         "with tracks.csv, or sweep_*.csv to plot")
    for path in written:
        print(path)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavgroup", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value scenario file (defaults when omitted)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a field")
        p.add_argument("--seed", type=int)

    p_run = sub.add_parser("run", help="one optimized run")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="parameter sweep")
    common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--reps", type=int, default=1, help="repetitions with seeds seed..seed+reps-1")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plot", help="regenerate SVGs from CSVs")
    p_plot.add_argument("--out", required=True, help="run or sweep directory")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigParseError, ConfigValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE

