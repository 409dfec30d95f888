#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Integer Program Builder
Assembles the hop/RASC-count ILP (P1) and its energy-aware MILP extension (P2)
as explicit sparse rows over indexed columns, independent of any solver
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .channel import LinkTable
from .config import EnergyParams, SERVING_RULES
from .energy import comm_energy, grasp_energy, travel_energy
from .exceptions import ModelError
from .scenario import DEPOT_ID, Scenario

LE, EQ, GE = "<=", "=", ">="


class VarKind(Enum):
    Y = "y"
    X = "x"
    E = "E"


@dataclass(frozen=True)
class VarIndex:
    """Structured identity of one column"""
    kind: VarKind
    key: Tuple[int, ...]
    column: int

    @property
    def name(self) -> str:
        return f"{self.kind.value}_" + "_".join(str(k) for k in self.key)


@dataclass(frozen=True)
class Constraint:
    """Sparse row: sum(coefs * x[cols]) sense rhs"""
    name: str
    tag: str
    cols: Tuple[int, ...]
    coefs: Tuple[float, ...]
    sense: str
    rhs: float

    def activity(self, values: np.ndarray) -> float:
        return float(sum(c * values[j] for j, c in zip(self.cols, self.coefs)))

    def violation(self, values: np.ndarray) -> float:
        """Non-negative amount by which the row is violated"""
        lhs = self.activity(values)
        if self.sense == LE:
            return max(lhs - self.rhs, 0.0)
        if self.sense == GE:
            return max(self.rhs - lhs, 0.0)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class IlpModel:
    """Immutable linear integer program with its planning metadata"""
    problem: str
    columns: Tuple[VarIndex, ...]
    objective: Tuple[float, ...]
    constraints: Tuple[Constraint, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    binary: Tuple[bool, ...]
    demands: Tuple[float, ...]
    n_rascs: int
    n_sites: int
    relay_sites: Tuple[int, ...]
    hotspot_nodes: Tuple[int, ...]
    serving: str
    energy_weight: float = 0.0
    site_fixed_energy: Dict[int, Tuple[float, float]] = field(default_factory=dict, compare=False)
    comm_energy_per_flow: float = 0.0

    @property
    def num_vars(self) -> int:
        return len(self.columns)

    @property
    def num_rows(self) -> int:
        return len(self.constraints)

    @property
    def n_flows(self) -> int:
        return len(self.demands)

    @property
    def objective_is_integral(self) -> bool:
        """True when every feasible objective value is an integer"""
        for var, c in zip(self.columns, self.objective):
            if c == 0:
                continue
            if not self.binary[var.column] or float(c) != math.floor(c):
                return False
        return True

    def columns_of(self, kind: VarKind) -> List[VarIndex]:
        return [v for v in self.columns if v.kind is kind]

    def column_map(self) -> Dict[Tuple[VarKind, Tuple[int, ...]], int]:
        return {(v.kind, v.key): v.column for v in self.columns}

    def objective_value(self, values: Sequence[float]) -> float:
        return float(np.dot(np.asarray(self.objective, dtype=float), np.asarray(values, dtype=float)))

    def dense(self) -> Tuple[np.ndarray, np.ndarray, List[str]]:
        """Dense constraint matrix, right-hand sides and senses"""
        a = np.zeros((self.num_rows, self.num_vars))
        for r, row in enumerate(self.constraints):
            for j, c in zip(row.cols, row.coefs):
                a[r, j] += c
        b = np.array([row.rhs for row in self.constraints], dtype=float)
        return a, b, [row.sense for row in self.constraints]


class _ModelBuilder:
    """Accumulates columns and rows in a fixed, deterministic order"""

    def __init__(self):
        self.columns: List[VarIndex] = []
        self.lookup: Dict[Tuple[VarKind, Tuple[int, ...]], int] = {}
        self.objective: List[float] = []
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.binary: List[bool] = []
        self.rows: List[Constraint] = []

    def add_column(self, kind: VarKind, key: Tuple[int, ...], cost: float,
                   binary: bool = True, upper: float = 1.0) -> int:
        col = len(self.columns)
        self.columns.append(VarIndex(kind, key, col))
        self.lookup[(kind, key)] = col
        self.objective.append(float(cost))
        self.lower.append(0.0)
        self.upper.append(upper if not binary else 1.0)
        self.binary.append(binary)
        return col

    def add_row(self, tag: str, terms: Iterable[Tuple[int, float]], sense: str, rhs: float):
        merged: Dict[int, float] = {}
        for col, coef in terms:
            merged[col] = merged.get(col, 0.0) + float(coef)
        cols = tuple(sorted(merged))
        coefs = tuple(merged[c] for c in cols)
        name = f"r{len(self.rows)}_{tag}"
        self.rows.append(Constraint(name, tag, cols, coefs, sense, float(rhs)))


def _check_inputs(scenario: Scenario, links: LinkTable, demands: Sequence[float],
                  n_rascs: int, serving: str):
    if not demands:
        raise ModelError("at least one flow demand is required")
    if len(demands) != scenario.n_hotspots:
        raise ModelError("one demand per hotspot is required",
                         f"{len(demands)} demands for {scenario.n_hotspots} hotspots")
    if any(not g > 0 for g in demands):
        raise ModelError("demands must be positive", str(list(demands)))
    if n_rascs < 1:
        raise ModelError("at least one RASC is required", f"n_rascs={n_rascs}")
    if links.n_nodes != scenario.n_nodes:
        raise ModelError("link table does not match the scenario",
                         f"{links.n_nodes} nodes vs {scenario.n_nodes}")
    if serving not in SERVING_RULES:
        raise ModelError(f"unknown serving rule '{serving}'")


def flow_arcs(scenario: Scenario, links: LinkTable, demands: Sequence[float],
              serving: str = "anchor", prune_arcs: bool = True,
              relay_sites: Optional[Sequence[int]] = None) -> List[List[Tuple[int, int]]]:
    """Directed arcs (i, j) each flow may use, in deterministic order"""
    if relay_sites is None:
        relay_sites = [s.id for s in scenario.lampposts]
    relays = sorted(relay_sites)
    heads = relays + [DEPOT_ID]

    def usable(i: int, j: int, gamma: float) -> bool:
        if not links.usable(i, j):
            return False
        return not prune_arcs or links.normalized_capacity(i, j) >= gamma

    per_flow = []
    for f, gamma in enumerate(demands):
        h = scenario.hotspot_node(f)
        arcs = []
        if serving == "anchor":
            targets = [scenario.hotspots[f].anchor] if scenario.hotspots[f].anchor in relays else []
        else:
            targets = relays
        for j in targets:
            if usable(h, j, gamma):
                arcs.append((h, j))
        for i in relays:
            for j in heads:
                if i != j and usable(i, j, gamma):
                    arcs.append((i, j))
        per_flow.append(arcs)
    return per_flow


def _assemble(scenario: Scenario, links: LinkTable, demands: Sequence[float], n_rascs: int,
              serving: str, prune_arcs: bool, fixed_sites: Optional[Sequence[int]],
              energy: Optional[EnergyParams], energy_weight: float) -> IlpModel:
    _check_inputs(scenario, links, demands, n_rascs, serving)
    lamppost_ids = [s.id for s in scenario.lampposts]
    if fixed_sites is not None:
        unknown = sorted(set(fixed_sites) - set(lamppost_ids))
        if unknown:
            raise ModelError("fixed sites must be lampposts", str(unknown))
        relay_sites = sorted(set(fixed_sites))
    else:
        relay_sites = lamppost_ids

    builder = _ModelBuilder()
    arcs_per_flow = flow_arcs(scenario, links, demands, serving, prune_arcs, relay_sites)

    for f, arcs in enumerate(arcs_per_flow):
        for i, j in arcs:
            builder.add_column(VarKind.Y, (i, j, f), 1.0)
    for i in relay_sites:
        for k in range(n_rascs):
            builder.add_column(VarKind.X, (i, k), 1.0)

    p2 = energy is not None
    site_fixed_energy: Dict[int, Tuple[float, float]] = {}
    e_comm = 0.0
    if p2:
        e_comm = comm_energy(energy)
        e_grasp = grasp_energy(energy)
        depot_pos = scenario.depot.position
        for i in relay_sites:
            pos = scenario.sites[i].position
            site_fixed_energy[i] = (travel_energy(energy, math.hypot(pos.x - depot_pos.x, pos.y - depot_pos.y)),
                                    e_grasp)
        for i in relay_sites:
            for k in range(n_rascs):
                builder.add_column(VarKind.E, (i, k), energy_weight, binary=False, upper=math.inf)

    y = builder.lookup
    x_cols = {i: [y[(VarKind.X, (i, k))] for k in range(n_rascs)] for i in relay_sites}

    # (2a) leave the hotspot, (2b) end at the depot, (2c) conservation at relays
    for f, arcs in enumerate(arcs_per_flow):
        h = scenario.hotspot_node(f)
        builder.add_row("2a", [(y[(VarKind.Y, (i, j, f))], 1.0) for i, j in arcs if i == h], EQ, 1.0)
    for f, arcs in enumerate(arcs_per_flow):
        builder.add_row("2b", [(y[(VarKind.Y, (i, j, f))], 1.0) for i, j in arcs if j == DEPOT_ID], EQ, 1.0)
    for f, arcs in enumerate(arcs_per_flow):
        for node in relay_sites:
            terms = []
            for i, j in arcs:
                if i == node:
                    terms.append((y[(VarKind.Y, (i, j, f))], 1.0))
                elif j == node:
                    terms.append((y[(VarKind.Y, (i, j, f))], -1.0))
            if terms:
                builder.add_row("2c", terms, EQ, 0.0)

    # (4a) one RASC per site, (4b) each RASC at one site
    for i in relay_sites:
        builder.add_row("4a", [(c, 1.0) for c in x_cols[i]], LE, 1.0)
    for k in range(n_rascs):
        builder.add_row("4b", [(x_cols[i][k], 1.0) for i in relay_sites], LE, 1.0)

    # (4c) a used arc needs an activated RASC at its tail
    for f, arcs in enumerate(arcs_per_flow):
        for i, j in arcs:
            if i in x_cols:
                terms = [(c, 1.0) for c in x_cols[i]] + [(y[(VarKind.Y, (i, j, f))], -1.0)]
                builder.add_row("4c", terms, GE, 0.0)

    # (6c) both directions of a physical link share its capacity
    pair_terms: Dict[Tuple[int, int], List[Tuple[int, float]]] = {}
    for f, arcs in enumerate(arcs_per_flow):
        for i, j in arcs:
            pair = (min(i, j), max(i, j))
            pair_terms.setdefault(pair, []).append((y[(VarKind.Y, (i, j, f))], float(demands[f])))
    for pair in sorted(pair_terms):
        builder.add_row("6c", pair_terms[pair], LE, links.normalized_capacity(*pair))

    if fixed_sites is not None:
        for i in relay_sites:
            builder.add_row("fix", [(c, 1.0) for c in x_cols[i]], EQ, 1.0)

    if p2:
        # (8a)-(8c) in epigraph form, tight whenever the energy weight is positive
        for i in relay_sites:
            out_cols = [y[(VarKind.Y, (a, b, f))]
                        for f, arcs in enumerate(arcs_per_flow) for a, b in arcs if a == i]
            fly, grasp = site_fixed_energy[i]
            big_m = e_comm * len(out_cols)
            for k in range(n_rascs):
                terms = [(y[(VarKind.E, (i, k))], 1.0), (x_cols[i][k], -(fly + grasp + big_m))]
                terms += [(c, -e_comm) for c in out_cols]
                builder.add_row("8", terms, GE, -big_m)

    return IlpModel(
        problem="p2" if p2 else "p1",
        columns=tuple(builder.columns),
        objective=tuple(builder.objective),
        constraints=tuple(builder.rows),
        lower=tuple(builder.lower),
        upper=tuple(builder.upper),
        binary=tuple(builder.binary),
        demands=tuple(float(g) for g in demands),
        n_rascs=n_rascs,
        n_sites=scenario.n_sites,
        relay_sites=tuple(relay_sites),
        hotspot_nodes=tuple(scenario.hotspot_node(f) for f in range(len(demands))),
        serving=serving,
        energy_weight=energy_weight if p2 else 0.0,
        site_fixed_energy=site_fixed_energy,
        comm_energy_per_flow=e_comm,
    )


def build_p1(scenario: Scenario, links: LinkTable, demands: Sequence[float], n_rascs: int = 15,
             serving: str = "anchor", prune_arcs: bool = True,
             fixed_sites: Optional[Sequence[int]] = None) -> IlpModel:
    """Minimize hops plus deployed RASCs subject to flow, placement and capacity rows"""
    return _assemble(scenario, links, demands, n_rascs, serving, prune_arcs, fixed_sites, None, 0.0)


def build_p2(scenario: Scenario, links: LinkTable, demands: Sequence[float], n_rascs: int,
             energy: EnergyParams, energy_weight: float = 1e-6, serving: str = "anchor",
             prune_arcs: bool = True, fixed_sites: Optional[Sequence[int]] = None) -> IlpModel:
    """P1 plus per-RASC energy columns weighted into the objective"""
    if energy_weight < 0:
        raise ModelError("energy weight must be non-negative", str(energy_weight))
    return _assemble(scenario, links, demands, n_rascs, serving, prune_arcs, fixed_sites,
                     energy, energy_weight)


@dataclass
class Violation:
    name: str
    tag: str
    amount: float
    detail: str = ""


@dataclass
class ValidationReport:
    ok: bool
    objective: float
    violations: List[Violation] = field(default_factory=list)

    def summary(self) -> str:
        if self.ok:
            return f"ok objective={self.objective:.9g}"
        first = self.violations[0]
        return f"{len(self.violations)} violation(s), first {first.name} [{first.tag}] by {first.amount:.6g}"


def validate_solution(model: IlpModel, assignment: Sequence[float], tolerance: float = 1e-6) -> ValidationReport:
    """Check rows, bounds and integrality and recompute the objective"""
    values = np.asarray(assignment, dtype=float)
    if values.shape != (model.num_vars,):
        raise ModelError("assignment length does not match the model",
                         f"{values.shape[0] if values.ndim else 0} vs {model.num_vars}")
    violations: List[Violation] = []
    for var in model.columns:
        v = values[var.column]
        lo, hi = model.lower[var.column], model.upper[var.column]
        if v < lo - tolerance or v > hi + tolerance:
            violations.append(Violation(var.name, "bounds", max(lo - v, v - hi), f"value {v:.6g}"))
        if model.binary[var.column] and abs(v - round(v)) > tolerance:
            violations.append(Violation(var.name, "integrality", abs(v - round(v)), f"value {v:.6g}"))
    for row in model.constraints:
        amount = row.violation(values)
        if amount > tolerance * max(1.0, abs(row.rhs)):
            violations.append(Violation(row.name, row.tag, amount,
                                        f"lhs {row.activity(values):.6g} {row.sense} {row.rhs:.6g}"))
    return ValidationReport(ok=not violations, objective=model.objective_value(values), violations=violations)


def _lp_terms(cols: Sequence[int], coefs: Sequence[float], names: List[str]) -> str:
    parts = []
    for j, c in zip(cols, coefs):
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {abs(c):.17g} {names[j]}")
    return " ".join(parts) if parts else "0 " + names[0] if names else "0"


def to_lp_format(model: IlpModel) -> str:
    """LP-style text dump: Minimize / Subject To / Bounds / Binaries / End"""
    names = [v.name for v in model.columns]
    lines = [f"\\ {model.problem.upper()} model, {model.num_vars} columns, {model.num_rows} rows",
             "Minimize"]
    obj_cols = [j for j, c in enumerate(model.objective) if c != 0]
    lines.append(" obj: " + _lp_terms(obj_cols, [model.objective[j] for j in obj_cols], names))
    lines.append("Subject To")
    for row in model.constraints:
        if row.cols:
            body = _lp_terms(row.cols, row.coefs, names)
        else:
            body = f"0 {names[0]}" if names else "0"
        lines.append(f" {row.name}: {body} {row.sense} {row.rhs:.17g}")
    lines.append("Bounds")
    for var in model.columns:
        j = var.column
        if model.binary[j]:
            continue
        if math.isinf(model.upper[j]):
            lines.append(f" {names[j]} >= {model.lower[j]:.17g}")
        else:
            lines.append(f" {model.lower[j]:.17g} <= {names[j]} <= {model.upper[j]:.17g}")
    binaries = [names[j] for j in range(model.num_vars) if model.binary[j]]
    if binaries:
        lines.append("Binaries")
        for start in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[start:start + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"
