#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Solution Reports
JSON and CSV solution files, reading them back for validation, and the
LP-format model dump
"""

import csv
import json
import os
import sys
from typing import Dict, List, Optional, TextIO

import numpy as np

from .baseline import FscPlan
from .exceptions import ValidationError
from .ilp import IlpModel, to_lp_format
from .scenario import Scenario, scenario_to_dict
from .solver import Solution

SOLUTION_CSV_COLUMNS = ["record", "flow", "site", "rasc", "hops", "path",
                        "e_fly_j", "e_grasp_j", "e_comm_j", "e_total_j"]


def solution_to_dict(solution: Solution, model: Optional[IlpModel] = None,
                     scenario: Optional[Scenario] = None, plan: Optional[FscPlan] = None,
                     **context) -> Dict:
    """Structured report; context entries (gamma, seed, ...) are stored as given"""
    label = scenario.node_label if scenario is not None else str
    data = {
        "status": solution.status.value,
        "objective": solution.objective,
        "rasc_count": solution.rasc_count,
        "hops": solution.hops,
        "paths": solution.paths,
        "path_labels": [[label(n) for n in path] for path in solution.paths],
        "placements": {str(site): k for site, k in sorted(solution.placements.items())},
        "energies": {str(site): e.as_dict() for site, e in sorted(solution.energies.items())},
        "total_energy_j": solution.total_energy,
        "stats": solution.stats.as_dict(),
    }
    if model is not None:
        data["problem"] = model.problem
        data["demands"] = list(model.demands)
        data["n_rascs"] = model.n_rascs
        data["serving"] = model.serving
        data["energy_weight"] = model.energy_weight
        if solution.assignment is not None:
            data["assignment"] = {var.name: float(solution.assignment[var.column])
                                  for var in model.columns if solution.assignment[var.column] != 0}
    if scenario is not None:
        data["scenario"] = scenario_to_dict(scenario)
    if plan is not None:
        data["fsc"] = plan.as_dict()
    data.update(context)
    return data


def write_solution_json(path: str, data: Dict):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def write_solution_csv(path: str, solution: Solution, scenario: Optional[Scenario] = None):
    """One row per flow path, then one row per placed RASC"""
    with open(path, "w", newline="", encoding="utf-8") as f:
        print_solution_csv(solution, scenario, f)


def print_solution_csv(solution: Solution, scenario: Optional[Scenario] = None,
                       stream: Optional[TextIO] = None):
    label = scenario.node_label if scenario is not None else str
    writer = csv.writer(stream if stream is not None else sys.stdout, lineterminator="\n")
    writer.writerow(SOLUTION_CSV_COLUMNS)
    for flow, p in enumerate(solution.paths):
        writer.writerow(["path", flow, "", "", len(p) - 1, " ".join(label(n) for n in p),
                         "", "", "", ""])
    for site, k in sorted(solution.placements.items()):
        e = solution.energies.get(site)
        energy = [f"{e.e_fly:.3f}", f"{e.e_grasp:.3f}", f"{e.e_comm:.3f}", f"{e.e_total:.3f}"] \
            if e is not None else ["", "", "", ""]
        writer.writerow(["rasc", "", site, k, "", ""] + energy)


def write_lp(path: str, model: IlpModel):
    with open(path, "w", encoding="utf-8") as f:
        f.write(to_lp_format(model))


def load_solution(path: str) -> Dict:
    """Read a solution JSON file written by write_solution_json"""
    if not os.path.isfile(path):
        raise ValidationError("solution file not found", path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError("solution file is not readable JSON", f"{path}: {e}")
    if not isinstance(data, dict):
        raise ValidationError("solution file is not a JSON object", path)
    for key in ("problem", "demands", "n_rascs", "scenario", "assignment"):
        if key not in data:
            raise ValidationError(f"solution file lacks '{key}'", path)
    if data["problem"] not in ("p1", "p2"):
        raise ValidationError(f"unknown problem '{data['problem']}'", path)
    if not isinstance(data["scenario"], dict) or not isinstance(data["assignment"], dict):
        raise ValidationError("scenario and assignment must be JSON objects", path)
    try:
        data["demands"] = [float(g) for g in data["demands"]]
        data["n_rascs"] = int(data["n_rascs"])
        data["assignment"] = {str(k): float(v) for k, v in data["assignment"].items()}
        if data.get("objective") is not None:
            data["objective"] = float(data["objective"])
    except (TypeError, ValueError) as e:
        raise ValidationError("solution file has malformed values", f"{path}: {e}")
    return data


def assignment_vector(model: IlpModel, named: Dict[str, float]) -> np.ndarray:
    """Column vector from a name -> value map; absent columns are zero"""
    index = {var.name: var.column for var in model.columns}
    unknown: List[str] = sorted(set(named) - set(index))
    if unknown:
        raise ValidationError("solution names columns the model does not have",
                              ", ".join(unknown[:5]))
    values = np.zeros(model.num_vars)
    for name, value in named.items():
        values[index[name]] = float(value)
    return values
