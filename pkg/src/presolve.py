#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Model Presolve
Collapses the interchangeable RASC columns of each site into one activation
column and folds the energy epigraph into the objective, so the search never
revisits relabelings of the same plan; reduced solutions expand back with the
used sites numbered in ascending order
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .exceptions import SolverError
from .ilp import GE, LE, Constraint, IlpModel, VarIndex, VarKind

logger = logging.getLogger(__name__)

# Rows whose terms carry over as they are, or with x_{i,.} summed into z_i
_MAPPED_TAGS = frozenset({"2a", "2b", "2c", "4c", "6c", "fix"})
_KNOWN_TAGS = _MAPPED_TAGS | {"4a", "4b", "8"}
_COEF_TOLERANCE = 1e-9


class _Unsupported(Exception):
    """Model shape the aggregation does not recognize"""


@dataclass(frozen=True)
class Reduction:
    """Reduced model plus what is needed to expand its solutions"""
    original: IlpModel
    model: IlpModel
    y_columns: Tuple[int, ...] = ()
    site_columns: Dict[int, int] = field(default_factory=dict)

    @classmethod
    def identity(cls, model: IlpModel) -> "Reduction":
        return cls(original=model, model=model)

    @property
    def reduced(self) -> bool:
        return self.model is not self.original

    def expand(self, values: Sequence[float]) -> np.ndarray:
        """Original-space assignment: y copied, used sites get RASCs 0, 1, ... in site order

        Energy columns are left at zero; the solver recomputes them from the plan.
        """
        values = np.asarray(values, dtype=float)
        if not self.reduced:
            return values.copy()
        full = np.zeros(self.original.num_vars)
        full[list(self.y_columns)] = values[:len(self.y_columns)]
        used = sorted(i for i, col in self.site_columns.items() if values[col] > 0.5)
        if len(used) > self.original.n_rascs:
            raise SolverError("reduced plan activates more sites than there are RASCs",
                              f"{len(used)} > {self.original.n_rascs}")
        cols = self.original.column_map()
        for k, site in enumerate(used):
            full[cols[(VarKind.X, (site, k))]] = 1.0
        return full


def presolve(model: IlpModel) -> Reduction:
    """Aggregate RASC labels; returns the identity reduction for unfamiliar models"""
    try:
        reduction = _aggregate(model)
    except _Unsupported as e:
        logger.debug("presolve skipped: %s", e)
        return Reduction.identity(model)
    logger.debug("presolve: %d x %d -> %d x %d", model.num_rows, model.num_vars,
                 reduction.model.num_rows, reduction.model.num_vars)
    return reduction


def _site_groups(model: IlpModel) -> Dict[int, List[int]]:
    """RASC columns per site, indexed by k"""
    groups: Dict[int, Dict[int, int]] = {}
    for var in model.columns_of(VarKind.X):
        if len(var.key) != 2:
            raise _Unsupported(f"unexpected placement key {var.key}")
        i, k = var.key
        groups.setdefault(i, {})[k] = var.column
    for i, by_k in groups.items():
        if sorted(by_k) != list(range(model.n_rascs)):
            raise _Unsupported(f"site {i} does not carry every RASC label")
    return {i: [by_k[k] for k in range(model.n_rascs)] for i, by_k in groups.items()}


def _uniform(values: Sequence[float], what: str) -> float:
    first = float(values[0])
    if any(abs(float(v) - first) > _COEF_TOLERANCE for v in values):
        raise _Unsupported(f"{what} differ across RASC labels")
    return first


def _check_energy_rows(model: IlpModel, groups: Dict[int, List[int]]):
    """The energy rows must be the tight epigraph of fly + grasp + e_comm * outgoing"""
    kind_of = {v.column: v for v in model.columns}
    e_comm = model.comm_energy_per_flow
    for row in model.constraints:
        if row.tag != "8":
            if any(kind_of[c].kind is VarKind.E for c in row.cols):
                raise _Unsupported(f"energy column in row {row.name}")
            continue
        terms = dict(zip(row.cols, row.coefs))
        e_cols = [c for c in terms if kind_of[c].kind is VarKind.E]
        x_cols = [c for c in terms if kind_of[c].kind is VarKind.X]
        y_cols = [c for c in terms if kind_of[c].kind is VarKind.Y]
        if len(e_cols) != 1 or len(x_cols) != 1 or row.sense != GE:
            raise _Unsupported(f"unexpected energy row {row.name}")
        i, k = kind_of[e_cols[0]].key
        if x_cols[0] != groups[i][k] or abs(terms[e_cols[0]] - 1.0) > _COEF_TOLERANCE:
            raise _Unsupported(f"energy row {row.name} mixes sites")
        tails = {kind_of[c].key[0] for c in y_cols}
        if tails - {i} or any(abs(terms[c] + e_comm) > _COEF_TOLERANCE for c in y_cols):
            raise _Unsupported(f"energy row {row.name} has foreign arcs")
        outgoing = sum(1 for v in model.columns_of(VarKind.Y) if v.key[0] == i)
        if len(y_cols) != outgoing:
            raise _Unsupported(f"energy row {row.name} misses outgoing arcs")
        fly, grasp = model.site_fixed_energy[i]
        big_m = -row.rhs
        if abs(big_m - e_comm * outgoing) > 1e-6 * max(1.0, big_m) or \
                abs(terms[x_cols[0]] + fly + grasp + big_m) > 1e-6 * max(1.0, fly + grasp + big_m):
            raise _Unsupported(f"energy row {row.name} is not the plan epigraph")


def _aggregate(model: IlpModel) -> Reduction:
    unknown = {row.tag for row in model.constraints} - _KNOWN_TAGS
    if unknown:
        raise _Unsupported(f"unknown row tags {sorted(unknown)}")
    if any(not model.binary[v.column] for v in model.columns if v.kind is not VarKind.E):
        raise _Unsupported("continuous flow or placement column")
    groups = _site_groups(model)
    if sorted(groups) != sorted(model.relay_sites):
        raise _Unsupported("placement columns do not match the relay sites")

    objective = np.asarray(model.objective, dtype=float)
    e_columns = model.columns_of(VarKind.E)
    weight = 0.0
    if e_columns:
        weight = _uniform([objective[v.column] for v in e_columns], "energy weights")
        if weight < 0:
            raise _Unsupported("negative energy weight")
        _check_energy_rows(model, groups)

    columns: List[VarIndex] = []
    cost: List[float] = []
    lower: List[float] = []
    upper: List[float] = []
    y_columns: List[int] = []
    remap: Dict[int, int] = {}
    for var in model.columns_of(VarKind.Y):
        i = var.key[0]
        extra = weight * model.comm_energy_per_flow if i in groups else 0.0
        remap[var.column] = len(columns)
        columns.append(VarIndex(VarKind.Y, var.key, len(columns)))
        cost.append(objective[var.column] + extra)
        lower.append(model.lower[var.column])
        upper.append(model.upper[var.column])
        y_columns.append(var.column)

    site_columns: Dict[int, int] = {}
    site_of: Dict[int, int] = {}
    for i in sorted(groups):
        x_cost = _uniform([objective[c] for c in groups[i]], f"site {i} placement costs")
        if any(model.lower[c] != 0.0 or model.upper[c] != 1.0 for c in groups[i]):
            raise _Unsupported(f"site {i} placement columns are already bounded")
        fly, grasp = model.site_fixed_energy.get(i, (0.0, 0.0)) if e_columns else (0.0, 0.0)
        site_columns[i] = len(columns)
        columns.append(VarIndex(VarKind.X, (i,), len(columns)))
        cost.append(x_cost + weight * (fly + grasp))
        lower.append(0.0)
        upper.append(1.0)
        for c in groups[i]:
            site_of[c] = i

    rows: List[Constraint] = []
    for row in model.constraints:
        if row.tag == "8":
            continue
        if row.tag in ("4a", "4b"):
            _check_assignment_row(row, site_of)
            continue
        rows.append(_map_row(row, remap, site_of, site_columns, groups, len(rows)))
    if model.n_rascs < len(site_columns):
        rows.append(Constraint(f"r{len(rows)}_4b", "4b", tuple(sorted(site_columns.values())),
                               tuple(1.0 for _ in site_columns), LE, float(model.n_rascs)))

    reduced = IlpModel(
        problem=model.problem,
        columns=tuple(columns),
        objective=tuple(cost),
        constraints=tuple(rows),
        lower=tuple(lower),
        upper=tuple(upper),
        binary=tuple(True for _ in columns),
        demands=model.demands,
        n_rascs=model.n_rascs,
        n_sites=model.n_sites,
        relay_sites=model.relay_sites,
        hotspot_nodes=model.hotspot_nodes,
        serving=model.serving,
    )
    return Reduction(original=model, model=reduced, y_columns=tuple(y_columns), site_columns=site_columns)


def _map_row(row: Constraint, remap: Dict[int, int], site_of: Dict[int, int],
             site_columns: Dict[int, int], groups: Dict[int, List[int]], index: int) -> Constraint:
    """Carry a row over, replacing each full set of a site's RASC terms by its activation column"""
    merged: Dict[int, float] = {}
    by_site: Dict[int, Dict[int, float]] = {}
    for col, coef in zip(row.cols, row.coefs):
        if col in remap:
            merged[remap[col]] = merged.get(remap[col], 0.0) + coef
        elif col in site_of:
            by_site.setdefault(site_of[col], {})[col] = coef
        else:
            raise _Unsupported(f"row {row.name} references an energy column")
    for i, terms in by_site.items():
        if sorted(terms) != sorted(groups[i]):
            raise _Unsupported(f"row {row.name} singles out a RASC label at site {i}")
        coef = _uniform(list(terms.values()), f"row {row.name} coefficients")
        merged[site_columns[i]] = merged.get(site_columns[i], 0.0) + coef
    cols = tuple(sorted(merged))
    return Constraint(f"r{index}_{row.tag}", row.tag, cols, tuple(merged[c] for c in cols),
                      row.sense, row.rhs)


def _check_assignment_row(row: Constraint, site_of: Dict[int, int]):
    """Assignment rows must be plain at-most-one rows over placement columns"""
    if row.sense != LE or abs(row.rhs - 1.0) > _COEF_TOLERANCE:
        raise _Unsupported(f"row {row.name} is not an at-most-one row")
    if any(c not in site_of for c in row.cols) or any(abs(a - 1.0) > _COEF_TOLERANCE for a in row.coefs):
        raise _Unsupported(f"row {row.name} mixes in other columns")
