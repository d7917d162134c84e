"""Error metrics and the multi-method comparison tables.

PRMSE and VRMSE are root-mean-square norms of the 3D position and velocity
errors against ground truth; TDE expresses PRMSE as a percentage of the
trajectory length. Because the vertical axis often dominates pure-inertial
error while most wheeled applications only care about the horizontal
plane, each metric is also reported in a 2D-horizontal variant.

Output files (plain CSV, byte-stable for fixed inputs):

* ``report.csv`` - method x trajectory metric rows plus an average row.
* ``track_<traj>_<method>.csv`` - estimated vs ground-truth positions.
* ``err_<traj>_<method>.csv`` - per-axis position/velocity errors vs time.
* ``yawrate_<traj>.csv`` - per-method body yaw-rate estimates vs time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import GroundTruthSeries, align_ground_truth
from .errors import DataError
from .pipeline import NavSolution


def prmse(est_pos: np.ndarray, gt_pos: np.ndarray, horizontal: bool = False) -> float:
    """Root-mean-square position error over paired samples.

    ``horizontal`` restricts the error norm to the N/E components.
    """
    est_pos, gt_pos = np.atleast_2d(est_pos), np.atleast_2d(gt_pos)
    if est_pos.shape != gt_pos.shape:
        raise DataError("paired series must have identical shapes")
    if est_pos.shape[0] == 0:
        raise DataError("metric over empty series")
    err = est_pos - gt_pos
    if horizontal:
        err = err[:, :2]
    return float(np.sqrt(np.mean(np.sum(err * err, axis=1))))


def vrmse(est_vel: np.ndarray, gt_vel: np.ndarray, horizontal: bool = False) -> float:
    """Root-mean-square velocity error over paired samples (same form as prmse)."""
    return prmse(est_vel, gt_vel, horizontal)


def tde(prmse_m: float, length_m: float) -> float:
    """Position RMSE as a percentage of the trajectory length."""
    if length_m <= 0.0:
        raise DataError(f"trajectory length must be positive, got {length_m}")
    return 100.0 * prmse_m / length_m


def trajectory_length(gt_pos: np.ndarray) -> float:
    """Sum of consecutive horizontal displacements of the ground truth."""
    gt_pos = np.atleast_2d(gt_pos)
    if gt_pos.shape[0] < 2:
        raise DataError("trajectory length needs at least 2 samples")
    steps = np.diff(gt_pos[:, :2], axis=0)
    return float(np.sum(np.linalg.norm(steps, axis=1)))


@dataclass
class MetricRow:
    """One method x trajectory entry of the comparison table."""

    method: str
    trajectory: str
    n_samples: int
    length_m: float
    prmse_m: float
    vrmse_ms: float
    tde_pct: float
    prmse_2d_m: float
    vrmse_2d_ms: float
    tde_2d_pct: float


def evaluate_solution(
    nav: NavSolution, gt: GroundTruthSeries, method: str, trajectory: str
) -> MetricRow:
    """Align one solution to ground truth and compute all metrics."""
    pair = align_ground_truth(nav, gt)
    length = trajectory_length(pair.gt_pos)
    p3 = prmse(pair.est_pos, pair.gt_pos)
    p2 = prmse(pair.est_pos, pair.gt_pos, horizontal=True)
    v3 = vrmse(pair.est_vel, pair.gt_vel)
    v2 = vrmse(pair.est_vel, pair.gt_vel, horizontal=True)
    return MetricRow(
        method,
        trajectory,
        pair.t.size,
        length,
        p3,
        v3,
        tde(p3, length),
        p2,
        v2,
        tde(p2, length),
    )


REPORT_HEADER = (
    "method,trajectory,n_samples,length_m,prmse_m,vrmse_ms,tde_pct,"
    "prmse_2d_m,vrmse_2d_ms,tde_2d_pct"
)


def compare(
    solutions: Mapping[str, Sequence[NavSolution]],
    ground_truths: Sequence[GroundTruthSeries],
    trajectory_names: Sequence[str] | None = None,
    out_dir: str | Path | None = None,
) -> list[MetricRow]:
    """Metric table for several methods over the same trajectories.

    ``solutions`` maps a method label to one solution per trajectory, all
    aligned against the same ground truths. Per method the table carries a
    row per trajectory plus an ``average`` row (unweighted mean). When
    ``out_dir`` is given, the report and the plot-ready track/error/yaw-rate
    CSVs are written there.
    """
    n_traj = len(ground_truths)
    if trajectory_names is None:
        trajectory_names = [f"traj{i + 1}" for i in range(n_traj)]
    for method, sols in solutions.items():
        if len(sols) != n_traj:
            raise DataError(
                f"method {method!r} has {len(sols)} solutions for {n_traj} trajectories"
            )

    rows: list[MetricRow] = []
    for method, sols in solutions.items():
        per_traj = [
            evaluate_solution(nav, gt, method, name)
            for nav, gt, name in zip(sols, ground_truths, trajectory_names)
        ]
        rows.extend(per_traj)
        if len(per_traj) > 1:
            rows.append(
                MetricRow(
                    method,
                    "average",
                    int(np.mean([r.n_samples for r in per_traj])),
                    float(np.mean([r.length_m for r in per_traj])),
                    float(np.mean([r.prmse_m for r in per_traj])),
                    float(np.mean([r.vrmse_ms for r in per_traj])),
                    float(np.mean([r.tde_pct for r in per_traj])),
                    float(np.mean([r.prmse_2d_m for r in per_traj])),
                    float(np.mean([r.vrmse_2d_ms for r in per_traj])),
                    float(np.mean([r.tde_2d_pct for r in per_traj])),
                )
            )
    if out_dir is not None:
        write_report(rows, Path(out_dir) / "report.csv")
        _write_plot_csvs(solutions, ground_truths, trajectory_names, Path(out_dir))
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def write_report(rows: Sequence[MetricRow], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(REPORT_HEADER + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    [
                        r.method,
                        r.trajectory,
                        str(r.n_samples),
                        _fmt(r.length_m),
                        _fmt(r.prmse_m),
                        _fmt(r.vrmse_ms),
                        _fmt(r.tde_pct),
                        _fmt(r.prmse_2d_m),
                        _fmt(r.vrmse_2d_ms),
                        _fmt(r.tde_2d_pct),
                    ]
                )
                + "\n"
            )


def _write_plot_csvs(
    solutions: Mapping[str, Sequence[NavSolution]],
    ground_truths: Sequence[GroundTruthSeries],
    names: Sequence[str],
    out: Path,
) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for j, (gt, name) in enumerate(zip(ground_truths, names)):
        slug = _slug(name)
        for method, sols in solutions.items():
            pair = align_ground_truth(sols[j], gt)
            with open(out / f"track_{slug}_{_slug(method)}.csv", "w") as fh:
                fh.write("t_s,est_n_m,est_e_m,est_d_m,gt_n_m,gt_e_m,gt_d_m\n")
                for k in range(pair.t.size):
                    fh.write(
                        ",".join(
                            _fmt(v)
                            for v in [pair.t[k], *pair.est_pos[k], *pair.gt_pos[k]]
                        )
                        + "\n"
                    )
            with open(out / f"err_{slug}_{_slug(method)}.csv", "w") as fh:
                fh.write("t_s,dn_m,de_m,dd_m,dvn_ms,dve_ms,dvd_ms\n")
                dp = pair.est_pos - pair.gt_pos
                dv = pair.est_vel - pair.gt_vel
                for k in range(pair.t.size):
                    fh.write(
                        ",".join(_fmt(v) for v in [pair.t[k], *dp[k], *dv[k]]) + "\n"
                    )
        methods = list(solutions)
        base_t = solutions[methods[0]][j].t
        with open(out / f"yawrate_{slug}.csv", "w") as fh:
            fh.write("t_s," + ",".join(f"{_slug(m)}_rads" for m in methods) + "\n")
            series = [
                np.interp(base_t, solutions[m][j].t, solutions[m][j].yaw_rate)
                for m in methods
            ]
            for k in range(base_t.size):
                fh.write(
                    ",".join(_fmt(v) for v in [base_t[k], *[s[k] for s in series]]) + "\n"
                )
