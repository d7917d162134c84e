"""Command-line entry point tying simulation, estimation and evaluation together.

Commands
--------
simulate : synthesize a recording (trajectory + seeded noise) to CSV files
run      : run one method over a recording, write the solution CSV
evaluate : score an existing solution CSV against a recording's ground truth
compare  : run several methods over one or more recordings, write the report

Every run writes a ``run_manifest.txt`` with the command line, seed and
package version so experiments are reproducible from files alone. Exit
codes: 0 success, 2 configuration/usage error, 3 data error, 4 numerical
divergence. The ``WICHINS_OUT`` environment variable sets the default
output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .baselines import run_cmi, run_odo, run_wmi
from .dataset import Recording, load_recording, save_recording
from .errors import ConfigError, DataError, DivergenceError, WichinsError
from .metrics import compare, evaluate_solution, write_report
from .pipeline import (
    NavSolution,
    load_solution,
    run_wichins,
    save_solution,
)
from .simulate import (
    NoiseSpec,
    Segment,
    SkidEvent,
    TrajectorySpec,
    benchmark_scenario,
    circle_spec,
    figure_eight_spec,
    simulate_recording,
    straight_spec,
)

METHOD_NAMES = ("2wichins", "4wichins", "odo", "wmi", "cmi")


def run_method(recording: Recording, method: str) -> NavSolution:
    """Dispatch a method name from the fixed set onto its runner."""
    if method == "2wichins":
        return run_wichins(recording, mode="2w")
    if method == "4wichins":
        return run_wichins(recording, mode="4w")
    if method == "odo":
        return run_odo(recording)
    if method == "wmi":
        return run_wmi(recording)
    if method == "cmi":
        return run_cmi(recording)
    raise ConfigError(f"unknown method {method!r}; expected one of {METHOD_NAMES}")


def _default_out() -> str:
    return os.environ.get("WICHINS_OUT", "wichins_out")


def _write_run_manifest(out: Path, entries: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "run_manifest.txt", "w") as fh:
        fh.write(f"version = {__version__}\n")
        for key in sorted(entries):
            fh.write(f"{key} = {entries[key]}\n")


def parse_skid(text: str) -> SkidEvent:
    """Parse ``wheel=1,t=30..33,s=0.2`` into a SkidEvent."""
    fields = dict(part.split("=", 1) for part in text.split(",") if "=" in part)
    try:
        t0, t1 = fields["t"].split("..")
        return SkidEvent(int(fields["wheel"]), float(t0), float(t1), float(fields["s"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad --skid spec {text!r}: expected wheel=I,t=A..B,s=S") from exc


def load_trajectory(name_or_path: str) -> tuple[TrajectorySpec, tuple[SkidEvent, ...]]:
    """Built-in trajectory name or a JSON segment-list file."""
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        try:
            raw = json.loads(path.read_text())
            segments = [
                Segment(
                    duration=float(s["duration"]),
                    yaw_rate=float(s.get("yaw_rate", 0.0)),
                    speed_start=s.get("speed_start"),
                    speed_end=s.get("speed_end"),
                )
                for s in raw["segments"]
            ]
            spec = TrajectorySpec(
                segments,
                rate_hz=float(raw.get("rate_hz", 120.0)),
                initial_heading=float(raw.get("initial_heading", 0.0)),
            )
            return spec, ()
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot parse trajectory spec {name_or_path!r}: {exc}") from exc
    builders = {
        "straight": lambda: (straight_spec(cruise_s=112.0), ()),
        "circle": lambda: (circle_spec(), ()),
        "figure8": lambda: (figure_eight_spec(), ()),
        "benchmark": benchmark_scenario,
    }
    if name_or_path not in builders:
        raise ConfigError(
            f"unknown trajectory {name_or_path!r}; expected one of "
            f"{sorted(builders)} or a JSON spec file"
        )
    return builders[name_or_path]()


def cmd_simulate(args: argparse.Namespace) -> int:
    spec, skids = load_trajectory(args.traj)
    skids = tuple(skids) + tuple(parse_skid(s) for s in args.skid or ())
    noise = NoiseSpec(seed=args.seed) if args.noise == "on" else NoiseSpec.off(args.seed)
    from .pipeline import default_vehicle

    vehicle = default_vehicle()
    recording = simulate_recording(
        spec, vehicle.wheels, noise, name=args.name, skid_events=skids
    )
    out = Path(args.out)
    save_recording(recording, out)
    _write_run_manifest(
        out,
        {
            "command": "simulate",
            "trajectory": args.traj,
            "seed": str(args.seed),
            "noise": args.noise,
            "skid": ";".join(args.skid or ()),
        },
    )
    print(f"wrote recording '{args.name}' ({len(recording.chassis)} samples) to {out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    recording = load_recording(args.recording)
    solution = run_method(recording, args.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sol_path = out / f"solution_{args.method}.csv"
    save_solution(solution, sol_path)
    _write_run_manifest(
        out,
        {"command": "run", "recording": str(args.recording), "method": args.method},
    )
    print(f"wrote {sol_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    recording = load_recording(args.recording)
    if recording.ground_truth is None:
        raise DataError(f"recording {args.recording} carries no ground truth")
    solution = load_solution(args.solution)
    row = evaluate_solution(
        solution,
        recording.ground_truth,
        args.label,
        recording.manifest.get("name", Path(args.recording).name),
    )
    out = Path(args.out)
    write_report([row], out / "report.csv")
    _write_run_manifest(
        out,
        {
            "command": "evaluate",
            "recording": str(args.recording),
            "solution": str(args.solution),
            "label": args.label,
        },
    )
    print(
        f"{row.method} on {row.trajectory}: PRMSE {row.prmse_m:.2f} m, "
        f"VRMSE {row.vrmse_ms:.2f} m/s, TDE {row.tde_pct:.2f} %"
    )
    return 0


def _compare_worker(task: tuple[str, str]) -> tuple[str, str, NavSolution]:
    recording_dir, method = task
    recording = load_recording(recording_dir)
    return recording_dir, method, run_method(recording, method)


def cmd_compare(args: argparse.Namespace) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHOD_NAMES:
            raise ConfigError(f"unknown method {m!r}; expected one of {METHOD_NAMES}")
    recordings = {d: load_recording(d) for d in args.recordings}
    names = []
    gts = []
    for d, rec in recordings.items():
        if rec.ground_truth is None:
            raise DataError(f"recording {d} carries no ground truth")
        names.append(rec.manifest.get("name", Path(d).name))
        gts.append(rec.ground_truth)

    tasks = [(d, m) for m in methods for d in args.recordings]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_compare_worker, tasks))
    else:
        results = [_compare_worker(t) for t in tasks]
    by_key = {(d, m): sol for d, m, sol in results}
    solutions = {m: [by_key[(d, m)] for d in args.recordings] for m in methods}

    out = Path(args.out)
    rows = compare(solutions, gts, names, out_dir=out)
    _write_run_manifest(
        out,
        {
            "command": "compare",
            "recordings": ";".join(str(d) for d in args.recordings),
            "methods": ",".join(methods),
        },
    )
    for row in rows:
        print(
            f"{row.method:10s} {row.trajectory:12s} PRMSE {row.prmse_m:10.2f} m  "
            f"VRMSE {row.vrmse_ms:8.2f} m/s  TDE {row.tde_pct:8.2f} %"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wichins",
        description="Wheel- and chassis-IMU pure-inertial navigation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a recording")
    p.add_argument("--traj", required=True, help="straight|circle|figure8|benchmark or JSON file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=_default_out())
    p.add_argument("--noise", choices=("on", "off"), default="on")
    p.add_argument("--skid", action="append", help="wheel=I,t=A..B,s=S (repeatable)")
    p.add_argument("--name", default="sim")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run one method over a recording")
    p.add_argument("--recording", required=True)
    p.add_argument("--method", required=True, choices=METHOD_NAMES)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="score an existing solution CSV")
    p.add_argument("--recording", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--label", default="solution")
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="run methods and tabulate metrics")
    p.add_argument("--recordings", nargs="+", required=True)
    p.add_argument("--methods", required=True, help="comma-separated method names")
    p.add_argument("--out", default=_default_out())
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    except WichinsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
