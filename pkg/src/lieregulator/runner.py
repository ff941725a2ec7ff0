"""Run scenarios to disk: trajectory CSV, metadata echo, summary, batch sweeps.

Output layout of :func:`run`::

    <out>/trajectory.csv   header row, time first, 17 significant digits
    <out>/metadata.yaml    every scenario parameter (rebuilds the scenario)
    <out>/summary.yaml     status, terminal errors, max Lyapunov increase,
                           convergence times of sum |e_i|^2
"""

from __future__ import annotations

import csv
import datetime as _dt
import glob as _glob
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .lie import GroupTag, inverse, random_element, rotation_angle
from .scenario import Scenario, ScenarioError, load_scenario
from .simulate import TrajectoryLog, convergence_time, max_increase, simulate

THRESHOLDS = (1e-2, 1e-4, 1e-6)
BATCH_COLUMNS = ["run", "seed", "initial_geodesic_error", "converged", "convergence_time",
                 "final_e_sq_sum", "status", "message"]


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_log(scenario: Scenario) -> TrajectoryLog:
    return simulate(scenario.loop, scenario.t_end, scenario.step, scenario.log_every, scenario.engine)


def summarize(scenario: Scenario, log: TrajectoryLog) -> dict:
    lyap = "L_bs" if scenario.loop.dynamic else "L"
    last = {c: float(v) for c, v in zip(log.columns, log.data[-1])} if len(log) else {}
    terminal = {k: v for k, v in last.items() if k in ("t", "group_error", "e_sq_sum", "w_tilde_norm",
                                                        "omega_tilde_norm", "L", "L_bs")}
    conv = {f"{thr:g}": convergence_time(log.t, log["e_sq_sum"], thr) for thr in THRESHOLDS}
    if log.status != "ok":
        conv = {k: None for k in conv}
    return {
        "scenario": scenario.name,
        "status": log.status,
        "message": log.message,
        "failed_at": log.failed_at,
        "finished": _now(),
        "engine": log.meta.get("engine"),
        "rows": len(log),
        "group_error_metric": "tr(I - E_r)" if scenario.tag is GroupTag.SO3 else "||E_r - I||_F",
        "terminal": terminal,
        "max_lyapunov_increase": {"column": lyap, "value": max_increase(log[lyap])},
        "convergence_time_e_sq_sum": conv,
        "max_orthogonality_drift": float(np.max(log["drift"])) if len(log) else None,
        "warnings": list(scenario.warnings),
    }


def run(scenario: Scenario, out_dir) -> dict:
    """Simulate ``scenario`` and write its CSV, metadata and summary into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"package_version": __version__, "started": _now(), "scenario": scenario.to_dict(),
            "warnings": list(scenario.warnings)}
    with open(out / "metadata.yaml", "w") as fh:
        yaml.safe_dump(meta, fh, sort_keys=False)
    log = run_log(scenario)
    log.to_csv(out / "trajectory.csv")
    summary = summarize(scenario, log)
    with open(out / "summary.yaml", "w") as fh:
        yaml.safe_dump(summary, fh, sort_keys=False)
    return summary


def initial_geodesic_error(scenario: Scenario) -> float:
    """Rotation angle of the initial relative error ``X^-1 X_d X_r^-1``."""
    lp = scenario.loop
    E_r = inverse(lp.tag, lp.X0) @ lp.Xd0 @ inverse(lp.tag, lp.ms.X_r)
    return rotation_angle(lp.tag, E_r)


def seeded(scenario: Scenario, seed: int) -> Scenario:
    """Copy of ``scenario`` with a random plant initial pose drawn from ``seed``."""
    X0 = random_element(scenario.tag, np.random.default_rng(seed))
    return scenario.with_initial_pose(X0)


@dataclass
class BatchRow:
    run: str
    seed: int | None
    initial_geodesic_error: float | None
    converged: bool
    convergence_time: float | None
    final_e_sq_sum: float | None
    status: str
    message: str = ""


def batch_one(scenario: Scenario, name: str, seed: int | None = None, out_dir=None,
              threshold: float = 1e-6) -> BatchRow:
    """One batch entry; failures become a row instead of an exception."""
    try:
        geo = initial_geodesic_error(scenario)
        if out_dir is not None:
            summary = run(scenario, Path(out_dir) / name)
            log = TrajectoryLog.from_csv(Path(out_dir) / name / "trajectory.csv")
            status, message = summary["status"], summary["message"]
        else:
            log = run_log(scenario)
            status, message = log.status, log.message
        e2 = log["e_sq_sum"]
        tc = convergence_time(log.t, e2, threshold) if status == "ok" else None
        return BatchRow(name, seed, geo, tc is not None, tc, float(e2[-1]) if len(e2) else None, status, message)
    except Exception as exc:  # isolate per-run failures
        return BatchRow(name, seed, None, False, None, None, "error", f"{type(exc).__name__}: {exc}")


def expand_glob(pattern: str) -> list[str]:
    paths = sorted(_glob.glob(pattern))
    if not paths:
        raise ScenarioError("batch", f"no scenario files match {pattern!r}")
    return paths


def batch(pattern: str | None = None, seeds: int | None = None, base: Scenario | None = None,
          out_dir=None, threshold: float = 1e-6, workers: int = 1, per_run_output: bool = False) -> list[BatchRow]:
    """Run a glob of scenario files or a seed sweep over ``base``.

    Writes ``aggregate.csv`` into ``out_dir`` when given.  Runs are
    independent; ``workers > 1`` spreads them over processes.
    """
    jobs = []
    if pattern is not None:
        for path in expand_glob(pattern):
            jobs.append((path, None))
    elif seeds is not None:
        if seeds < 1:
            raise ValueError("need at least one seed")
        if base is None:
            base = load_scenario("almost_global_so3")
        jobs = [(base, s) for s in range(seeds)]
    else:
        raise ValueError("give a glob pattern or a number of seeds")
    sub = Path(out_dir) / "runs" if (out_dir is not None and per_run_output) else None
    args = [(job, seed, sub, threshold) for job, seed in jobs]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_batch_job, args))
    else:
        rows = [_batch_job(a) for a in args]
    if out_dir is not None:
        write_aggregate(rows, Path(out_dir) / "aggregate.csv")
    return rows


def _batch_job(args) -> BatchRow:
    job, seed, sub, threshold = args
    if seed is None:
        name = Path(job).stem
        try:
            scenario = load_scenario(job)
        except Exception as exc:
            return BatchRow(name, None, None, False, None, None, "invalid", str(exc))
    else:
        scenario, name = seeded(job, seed), f"seed_{seed:04d}"
    return batch_one(scenario, name, seed, sub, threshold)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_aggregate(rows: list[BatchRow], path) -> None:
    os.makedirs(Path(path).parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BATCH_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in BATCH_COLUMNS])
