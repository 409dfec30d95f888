#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Monte Carlo Sweep
Runs P1, P2 and the FSC baseline over the demand grid and hotspot counts,
aggregates per cell, writes the result files and offers a background worker
"""

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from PyQt5.QtCore import QMutex, QMutexLocker, QThread, pyqtSignal

from .baseline import FscPlan, evaluate_fsc, plan_fsc
from .channel import LinkTable, build_link_table
from .config import ExperimentConfig
from .exceptions import InfeasibleError, PlannerError
from .ilp import build_p1, build_p2, validate_solution
from .scenario import Scenario, generate_manhattan, place_hotspots
from .solver import SolutionStatus, solve

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = ["trial", "seed", "gamma", "n_e", "p1_count", "p1_obj", "p2_count", "p2_obj",
                 "p2_energy_j", "fsc_count", "status", "bnb_nodes", "wall_ms"]
SUMMARY_COLUMNS = ["gamma", "n_e", "trials", "ok",
                   "p1_mean", "p1_std", "p1_min", "p1_max",
                   "p2_mean", "p2_std", "p2_min", "p2_max",
                   "fsc_mean", "fsc_std", "fsc_min", "fsc_max", "savings_mean"]

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_NODE_LIMIT = "node_limit"
STATUS_ERROR = "error"


@dataclass
class TrialResult:
    """One Monte Carlo trial; counts are -1 when the corresponding solve failed"""
    trial: int
    seed: int
    gamma: float
    n_e: int
    p1_count: int = -1
    p1_obj: float = float("nan")
    p2_count: int = -1
    p2_obj: float = float("nan")
    p2_energy_j: float = float("nan")
    fsc_count: int = -1
    status: str = STATUS_OK
    bnb_nodes: int = 0
    wall_ms: int = 0
    fsc_routed: Optional[bool] = None

    def csv_row(self) -> List[str]:
        return [str(self.trial), str(self.seed), f"{self.gamma:g}", str(self.n_e),
                str(self.p1_count), f"{self.p1_obj:.6f}", str(self.p2_count), f"{self.p2_obj:.6f}",
                f"{self.p2_energy_j:.3f}", str(self.fsc_count), self.status,
                str(self.bnb_nodes), str(self.wall_ms)]


@dataclass
class CellSummary:
    gamma: float
    n_e: int
    trials: int
    ok: int
    stats: Dict[str, float] = field(default_factory=dict)

    def csv_row(self) -> List[str]:
        values = [self.stats.get(name, float("nan")) for name in SUMMARY_COLUMNS[4:]]
        return [f"{self.gamma:g}", str(self.n_e), str(self.trials), str(self.ok)] + [f"{v:.6f}" for v in values]


@dataclass
class SweepResult:
    rows: List[TrialResult]
    summary: List[CellSummary]
    fsc_counts: Dict[float, Optional[int]]
    stopped: bool = False


def trial_seed(master_seed: int, gamma: float, n_e: int, trial: int) -> int:
    """64-bit seed of one cell trial, independent of the rest of the grid"""
    key = f"{master_seed}|{gamma:.6f}|{n_e}|{trial}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _status_of(status: SolutionStatus) -> str:
    if status is SolutionStatus.INFEASIBLE:
        return STATUS_INFEASIBLE
    if status is SolutionStatus.NODE_LIMIT:
        return STATUS_NODE_LIMIT
    return STATUS_OK


def run_trial(config: ExperimentConfig, base: Scenario, gamma: float, n_e: int, trial: int,
              plan: Optional[FscPlan]) -> TrialResult:
    """Place hotspots, solve P1 and P2 and route over the FSC plan"""
    started = time.perf_counter()
    seed = trial_seed(config.master_seed, gamma, n_e, trial)
    result = TrialResult(trial=trial, seed=seed, gamma=gamma, n_e=n_e,
                         fsc_count=plan.count if plan is not None else -1)
    try:
        rng = np.random.default_rng(seed)
        scenario = place_hotspots(base, n_e, gamma, rng)
        links = build_link_table(scenario, config.channel, rng)
        demands = [gamma] * n_e

        p1_model = build_p1(scenario, links, demands, config.n_rascs, config.serving, config.prune_arcs)
        p1 = solve(p1_model, config.solver)
        result.bnb_nodes += p1.stats.bnb_nodes
        result.status = _status_of(p1.status)
        if p1.is_optimal:
            result.p1_count, result.p1_obj = p1.rasc_count, p1.objective
            _check(p1_model, p1.assignment, "p1", seed)

        p2_model = build_p2(scenario, links, demands, config.n_rascs, config.energy,
                            config.energy_weight, config.serving, config.prune_arcs)
        p2 = solve(p2_model, config.solver)
        result.bnb_nodes += p2.stats.bnb_nodes
        if p2.is_optimal:
            result.p2_count, result.p2_obj = p2.rasc_count, p2.objective
            result.p2_energy_j = p2.total_energy
            _check(p2_model, p2.assignment, "p2", seed)
        elif result.status == STATUS_OK:
            result.status = _status_of(p2.status)

        if plan is not None and config.evaluate_fsc:
            routed = evaluate_fsc(plan, scenario, links, demands, config.solver)
            result.fsc_routed = routed.feasible
            if not routed.feasible:
                logger.warning("FSC plan at gamma=%g cannot carry trial %d (flows %s)",
                               gamma, trial, routed.failed_flows)
    except PlannerError as e:
        logger.error("trial %d (gamma=%g, N_E=%d) failed: %s", trial, gamma, n_e, e)
        result.status = STATUS_ERROR

    if config.record_timing:
        result.wall_ms = int(round((time.perf_counter() - started) * 1000))
    return result


def _check(model, assignment, label: str, seed: int):
    report = validate_solution(model, assignment)
    if not report.ok:
        raise PlannerError(f"{label} solution fails validation", f"seed {seed}: {report.summary()}")


def plan_baselines(config: ExperimentConfig, base: Scenario,
                   links: Optional[LinkTable] = None) -> Dict[float, Optional[FscPlan]]:
    """FSC plan per demand level; hotspot-independent so computed once"""
    if links is None:
        links = build_link_table(base, config.channel)
    plans: Dict[float, Optional[FscPlan]] = {}
    for gamma in config.gammas:
        try:
            plans[gamma] = plan_fsc(base, links, gamma, config.channel, n_flows=max(config.n_e_values))
        except InfeasibleError as e:
            logger.warning("no FSC plan at gamma=%g: %s", gamma, e)
            plans[gamma] = None
    return plans


def _tasks(config: ExperimentConfig) -> Iterator[Tuple[float, int, int]]:
    for gamma in config.gammas:
        for n_e in config.n_e_values:
            for trial in range(config.trials):
                yield gamma, n_e, trial


def _run_task(args) -> TrialResult:
    config, base, gamma, n_e, trial, plan = args
    return run_trial(config, base, gamma, n_e, trial, plan)


def run_sweep(config: ExperimentConfig,
              on_trial: Optional[Callable[[TrialResult, int, int], None]] = None,
              should_stop: Optional[Callable[[], bool]] = None) -> SweepResult:
    """Run every (gamma, N_E, trial) cell; rows come back in grid order"""
    base = generate_manhattan(config.scenario)
    plans = plan_baselines(config, base)
    tasks = list(_tasks(config))
    total = len(tasks)
    logger.info("sweep: %d gammas x %d N_E x %d trials = %d trials, %d worker(s)",
                len(config.gammas), len(config.n_e_values), config.trials, total, config.workers)

    rows: List[TrialResult] = []
    stopped = False

    def collect(result: TrialResult) -> bool:
        rows.append(result)
        if on_trial is not None:
            on_trial(result, len(rows), total)
        if result.trial == config.trials - 1:
            logger.info("cell gamma=%g N_E=%d done (%d/%d)", result.gamma, result.n_e, len(rows), total)
        return should_stop is not None and should_stop()

    if config.workers > 1:
        payload = [(config, base, g, n, t, plans[g]) for g, n, t in tasks]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for result in pool.map(_run_task, payload, chunksize=max(1, config.trials // 4)):
                if collect(result):
                    stopped = True
                    pool.shutdown(wait=False, cancel_futures=True)
                    break
    else:
        for gamma, n_e, trial in tasks:
            if collect(run_trial(config, base, gamma, n_e, trial, plans[gamma])):
                stopped = True
                break

    fsc_counts = {g: (p.count if p is not None else None) for g, p in plans.items()}
    return SweepResult(rows=rows, summary=summarize(rows), fsc_counts=fsc_counts, stopped=stopped)


def _describe(values: Sequence[float], prefix: str) -> Dict[str, float]:
    if not values:
        nan = float("nan")
        return {f"{prefix}_mean": nan, f"{prefix}_std": nan, f"{prefix}_min": nan, f"{prefix}_max": nan}
    arr = np.asarray(values, dtype=float)
    return {f"{prefix}_mean": float(arr.mean()), f"{prefix}_std": float(arr.std()),
            f"{prefix}_min": float(arr.min()), f"{prefix}_max": float(arr.max())}


def summarize(rows: Sequence[TrialResult]) -> List[CellSummary]:
    """Per-cell mean, std, min and max over the successful trials"""
    cells: Dict[Tuple[float, int], List[TrialResult]] = {}
    for row in rows:
        cells.setdefault((row.gamma, row.n_e), []).append(row)
    summary = []
    for (gamma, n_e), members in cells.items():
        ok = [r for r in members if r.status == STATUS_OK]
        stats: Dict[str, float] = {}
        stats.update(_describe([r.p1_count for r in ok], "p1"))
        stats.update(_describe([r.p2_count for r in ok if r.p2_count >= 0], "p2"))
        stats.update(_describe([r.fsc_count for r in ok if r.fsc_count >= 0], "fsc"))
        savings = [(r.fsc_count - r.p1_count) / r.fsc_count for r in ok if r.fsc_count > 0]
        stats["savings_mean"] = float(np.mean(savings)) if savings else float("nan")
        summary.append(CellSummary(gamma=gamma, n_e=n_e, trials=len(members), ok=len(ok), stats=stats))
    return summary


def write_results(result: SweepResult, out_dir: str) -> Dict[str, str]:
    """Write trials.csv, summary.csv, summary.json and fsc_counts.csv"""
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name)
             for name in ("trials.csv", "summary.csv", "summary.json", "fsc_counts.csv")}

    with open(paths["trials.csv"], "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        for row in result.rows:
            writer.writerow(row.csv_row())

    with open(paths["summary.csv"], "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for cell in result.summary:
            writer.writerow(cell.csv_row())

    with open(paths["summary.json"], "w", encoding="utf-8") as f:
        cells = []
        for cell in result.summary:
            entry = {"gamma": cell.gamma, "n_e": cell.n_e, "trials": cell.trials, "ok": cell.ok}
            entry.update({k: (None if np.isnan(v) else v) for k, v in cell.stats.items()})
            cells.append(entry)
        json.dump({"cells": cells, "stopped": result.stopped,
                   "fsc_counts": {f"{g:g}": c for g, c in result.fsc_counts.items()}},
                  f, indent=2, sort_keys=True)
        f.write("\n")

    with open(paths["fsc_counts.csv"], "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["gamma", "fsc_count"])
        for gamma, count in result.fsc_counts.items():
            writer.writerow([f"{gamma:g}", "" if count is None else count])
    return paths


class SweepWorker(QThread):
    """Background sweep with progress signals"""

    # Signals
    sweep_started = pyqtSignal(int)  # total trials
    progress_updated = pyqtSignal(int, int)  # done, total
    trial_finished = pyqtSignal(object)  # TrialResult
    sweep_finished = pyqtSignal(int)  # trials run
    error_occurred = pyqtSignal(str, str)  # message, detail

    def __init__(self, config: ExperimentConfig, parent=None):
        super().__init__(parent)
        self.config = config
        self.mutex = QMutex()
        self.should_stop = False
        self.result: Optional[SweepResult] = None

    def start_sweep(self):
        self.should_stop = False
        self.result = None
        self.start()

    def stop(self):
        """Ask the sweep to stop after the current trial"""
        with QMutexLocker(self.mutex):
            self.should_stop = True

    def _should_stop(self) -> bool:
        with QMutexLocker(self.mutex):
            return self.should_stop

    def _on_trial(self, row: TrialResult, done: int, total: int):
        self.trial_finished.emit(row)
        self.progress_updated.emit(done, total)

    def run(self):
        """Main sweep thread execution"""
        cfg = self.config
        try:
            self.sweep_started.emit(len(cfg.gammas) * len(cfg.n_e_values) * cfg.trials)
            self.result = run_sweep(cfg, on_trial=self._on_trial, should_stop=self._should_stop)
            self.sweep_finished.emit(len(self.result.rows))
        except PlannerError as e:
            self.error_occurred.emit(e.message, e.detail)
        except Exception as e:
            logger.debug("sweep crashed", exc_info=True)
            self.error_occurred.emit(f"Sweep error: {e}", type(e).__name__)
