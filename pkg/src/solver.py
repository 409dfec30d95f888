#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Exact Planner Solver
Best-first branch-and-bound over warm-started LP relaxations of the presolved
model, path and placement extraction, and a brute-force path-enumeration oracle
for small instances
"""

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .channel import LinkTable
from .config import SolverConfig
from .energy import EnergyBreakdown
from .exceptions import EnumerationLimitError, ModelError, SolverError
from .ilp import IlpModel, VarKind, flow_arcs, validate_solution
from .presolve import Reduction, presolve
from .scenario import DEPOT_ID, Scenario
from .simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, BasisSnapshot, BoundedSimplex, LpResult

logger = logging.getLogger(__name__)

# Branching priority: flow arcs first, then placements
_CLASS_ORDER = (VarKind.Y, VarKind.X, VarKind.E)


class SolutionStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NODE_LIMIT = "NodeLimit"


@dataclass
class SolverStats:
    bnb_nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    gap: float = 0.0

    def as_dict(self) -> Dict:
        return {"bnb_nodes": self.bnb_nodes, "lp_iterations": self.lp_iterations,
                "wall_time": self.wall_time, "gap": self.gap}


@dataclass
class Solution:
    """Solved plan: routed paths, RASC placements and, for P2, energies"""
    status: SolutionStatus
    objective: Optional[float] = None
    assignment: Optional[np.ndarray] = None
    paths: List[List[int]] = field(default_factory=list)
    placements: Dict[int, int] = field(default_factory=dict)
    energies: Dict[int, EnergyBreakdown] = field(default_factory=dict)
    stats: SolverStats = field(default_factory=SolverStats)

    @property
    def is_optimal(self) -> bool:
        return self.status is SolutionStatus.OPTIMAL

    @property
    def rasc_count(self) -> int:
        return len(self.placements)

    @property
    def hops(self) -> int:
        return sum(len(p) - 1 for p in self.paths)

    @property
    def total_energy(self) -> float:
        return sum(e.e_total for e in self.energies.values())


@dataclass
class LpRelaxation:
    status: str
    x: np.ndarray
    bound: float
    iterations: int

    @property
    def feasible(self) -> bool:
        return self.status == OPTIMAL


def lp_relax(model: IlpModel, config: Optional[SolverConfig] = None,
             lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None) -> LpRelaxation:
    """Solve the continuous relaxation, optionally under tightened column bounds"""
    if config is None:
        config = SolverConfig()
    lo = np.asarray(model.lower if lower is None else lower, dtype=float)
    hi = np.asarray(model.upper if upper is None else upper, dtype=float)
    return _relax(np.asarray(model.objective, dtype=float), model.dense(), lo, hi, config)


def _relax(c: np.ndarray, dense: Tuple[np.ndarray, np.ndarray, List[str]], lower: np.ndarray,
           upper: np.ndarray, config: SolverConfig) -> LpRelaxation:
    a, b, senses = dense
    result = BoundedSimplex(c, a, b, senses, lower, upper, tolerance=config.lp_tolerance,
                            max_iterations=config.max_lp_iterations).solve()
    if result.status == ITERATION_LIMIT:
        raise SolverError("LP iteration limit reached", f"{result.iterations} iterations")
    return _relaxation(result)


def _relaxation(result: LpResult) -> LpRelaxation:
    bound = result.objective if result.status == OPTIMAL else (
        -math.inf if result.status == UNBOUNDED else math.inf)
    return LpRelaxation(result.status, result.x, bound, result.iterations)


class _PseudoCosts:
    """Per-column running averages of bound degradation per unit change"""

    def __init__(self, n: int):
        self.down_sum = np.zeros(n)
        self.up_sum = np.zeros(n)
        self.down_count = np.zeros(n)
        self.up_count = np.zeros(n)

    def record(self, column: int, up: bool, delta_bound: float, fraction: float):
        if not math.isfinite(delta_bound) or fraction <= 0:
            return
        if up:
            self.up_sum[column] += delta_bound / fraction
            self.up_count[column] += 1
        else:
            self.down_sum[column] += delta_bound / fraction
            self.down_count[column] += 1

    def score(self, columns: np.ndarray, frac: np.ndarray) -> np.ndarray:
        def averaged(total, count):
            known = count > 0
            fallback = float(np.mean(total[known] / count[known])) if known.any() else 1.0
            return np.where(count[columns] > 0, total[columns] / np.maximum(count[columns], 1), fallback)

        down = averaged(self.down_sum, self.down_count) * frac
        up = averaged(self.up_sum, self.up_count) * (1.0 - frac)
        return np.maximum(down, 1e-6) * np.maximum(up, 1e-6)


def _branch_column(x: np.ndarray, config: SolverConfig, kinds: np.ndarray, binary: np.ndarray,
                   pseudo: Optional[_PseudoCosts]) -> int:
    """Column to branch on, or -1 when every binary column is integral"""
    frac = x - np.floor(x)
    distance = np.minimum(frac, 1.0 - frac)
    fractional = binary & (distance > config.integrality_tolerance)
    for order in range(len(_CLASS_ORDER)):
        candidates = np.flatnonzero(fractional & (kinds == order))
        if candidates.size == 0:
            continue
        if pseudo is not None:
            scores = pseudo.score(candidates, frac[candidates])
        else:
            scores = distance[candidates]
        # argmax returns the first maximum, i.e. the lowest column index
        return int(candidates[int(np.argmax(scores))])
    return -1


def _prunable(bound: float, incumbent: float, integral: bool, tol: float) -> bool:
    if not math.isfinite(incumbent):
        return False
    if integral:
        return bound >= incumbent - 1.0 + tol
    return bound >= incumbent - tol


def _finalize(model: IlpModel, x: np.ndarray) -> np.ndarray:
    """Round binaries and recompute energy columns exactly from the rounded plan"""
    values = np.where(np.asarray(model.binary), np.round(x), x)
    if model.problem != "p2":
        return values
    cols = model.column_map()
    out_used: Dict[int, int] = {}
    for var in model.columns_of(VarKind.Y):
        i = var.key[0]
        if values[var.column] > 0.5:
            out_used[i] = out_used.get(i, 0) + 1
    for var in model.columns_of(VarKind.E):
        i, k = var.key
        placed = values[cols[(VarKind.X, (i, k))]] > 0.5
        if placed:
            fly, grasp = model.site_fixed_energy[i]
            values[var.column] = fly + grasp + model.comm_energy_per_flow * out_used.get(i, 0)
        else:
            values[var.column] = 0.0
    return values


def extract_paths(model: IlpModel, values: np.ndarray) -> List[List[int]]:
    """Walk the chosen arcs of every flow from its hotspot to the depot"""
    successor: List[Dict[int, int]] = [dict() for _ in range(model.n_flows)]
    for var in model.columns_of(VarKind.Y):
        if values[var.column] > 0.5:
            i, j, f = var.key
            if i in successor[f]:
                raise SolverError("flow leaves a node twice", f"flow {f} at node {i}")
            successor[f][i] = j
    paths = []
    for f, hotspot in enumerate(model.hotspot_nodes):
        path = [hotspot]
        seen = {hotspot}
        node = hotspot
        while node != DEPOT_ID:
            if node not in successor[f]:
                raise SolverError("flow path is broken", f"flow {f} stops at node {node}")
            node = successor[f][node]
            if node in seen:
                raise SolverError("flow path revisits a node", f"flow {f} at node {node}")
            seen.add(node)
            path.append(node)
        paths.append(path)
    return paths


def _decode(model: IlpModel, values: np.ndarray, stats: SolverStats) -> Solution:
    paths = extract_paths(model, values)
    placements = {}
    for var in model.columns_of(VarKind.X):
        if values[var.column] > 0.5:
            i, k = var.key
            placements[i] = k
    energies = {}
    if model.problem == "p2":
        for i in sorted(placements):
            forwarded = sum(1 for p in paths for a in p[1:-1] if a == i)
            fly, grasp = model.site_fixed_energy[i]
            energies[i] = EnergyBreakdown(fly, grasp, forwarded * model.comm_energy_per_flow)
    return Solution(status=SolutionStatus.OPTIMAL, objective=model.objective_value(values),
                    assignment=values, paths=paths, placements=placements,
                    energies=energies, stats=stats)


def solve(model: IlpModel, config: Optional[SolverConfig] = None) -> Solution:
    """Exact best-first branch-and-bound; NodeLimit when the budget runs out

    The search runs on the presolved model when presolve is enabled; children
    re-optimize their parent's basis with the dual simplex when warm starts are.
    """
    if config is None:
        config = SolverConfig()
    started = time.perf_counter()
    stats = SolverStats()
    reduction = presolve(model) if config.presolve else Reduction.identity(model)
    work = reduction.model

    kind_rank = {kind: r for r, kind in enumerate(_CLASS_ORDER)}
    kinds = np.array([kind_rank[v.kind] for v in work.columns], dtype=int)
    binary = np.array(work.binary, dtype=bool)
    integral = work.objective_is_integral
    tol = config.integrality_tolerance
    pseudo = _PseudoCosts(work.num_vars) if config.branching == "pseudo-cost" else None

    incumbent: Optional[np.ndarray] = None
    incumbent_obj = math.inf
    heap: List[Tuple[float, int, int, np.ndarray, np.ndarray, np.ndarray, Optional[BasisSnapshot]]] = []
    counter = itertools.count()
    cost = np.asarray(work.objective, dtype=float)
    dense = work.dense()
    root_lower = np.array(work.lower, dtype=float)
    root_upper = np.array(work.upper, dtype=float)
    engine = BoundedSimplex(cost, dense[0], dense[1], dense[2], root_lower, root_upper,
                            tolerance=config.lp_tolerance, max_iterations=config.max_lp_iterations)

    def evaluate(lower, upper, start):
        if start is None:
            relaxation = _relax(cost, dense, lower, upper, config)
            basis = None
        else:
            result = engine.resolve(lower, upper, start)
            if result.status == ITERATION_LIMIT:
                raise SolverError("LP iteration limit reached", f"{result.iterations} iterations")
            relaxation = _relaxation(result)
            basis = engine.snapshot() if result.status == OPTIMAL else None
        stats.bnb_nodes += 1
        stats.lp_iterations += relaxation.iterations
        return relaxation, basis

    def push(relaxation, lower, upper, basis):
        seq = next(counter)
        order = seq if config.deterministic_order else -seq
        heapq.heappush(heap, (relaxation.bound, order, seq, relaxation.x, lower, upper, basis))

    result = engine.solve()
    if result.status == ITERATION_LIMIT:
        raise SolverError("LP iteration limit reached", f"{result.iterations} iterations")
    root = _relaxation(result)
    stats.bnb_nodes += 1
    stats.lp_iterations += root.iterations
    if root.status == UNBOUNDED:
        raise SolverError("LP relaxation is unbounded")
    if root.status == INFEASIBLE:
        stats.wall_time = time.perf_counter() - started
        logger.debug("root relaxation infeasible")
        return Solution(status=SolutionStatus.INFEASIBLE, stats=stats)
    push(root, root_lower, root_upper, engine.snapshot() if config.warm_start else None)

    node_limited = False
    open_bound = math.inf
    while heap:
        bound, _, _, x, lower, upper, basis = heapq.heappop(heap)
        if _prunable(bound, incumbent_obj, integral, tol):
            continue
        column = _branch_column(x, config, kinds, binary, pseudo)
        if column < 0:
            value = float(np.dot(work.objective, x))
            if value < incumbent_obj - tol:
                incumbent, incumbent_obj = x, value
                logger.debug("incumbent %.9g after %d nodes", value, stats.bnb_nodes)
            continue
        if stats.bnb_nodes >= config.node_limit:
            open_bound = min([bound] + [entry[0] for entry in heap])
            node_limited = True
            break

        fraction = x[column] - math.floor(x[column])
        for up in (False, True):
            child_lower, child_upper = lower.copy(), upper.copy()
            if up:
                child_lower[column] = 1.0
            else:
                child_upper[column] = 0.0
            child, child_basis = evaluate(child_lower, child_upper, basis)
            if child.status == UNBOUNDED:
                raise SolverError("LP relaxation is unbounded")
            if pseudo is not None:
                pseudo.record(column, up, child.bound - bound, (1.0 - fraction) if up else fraction)
            if child.feasible and not _prunable(child.bound, incumbent_obj, integral, tol):
                push(child, child_lower, child_upper, child_basis)

    stats.wall_time = time.perf_counter() - started
    if node_limited:
        stats.gap = incumbent_obj - open_bound if incumbent is not None else math.inf
        logger.warning("node limit %d reached (gap %.6g)", config.node_limit, stats.gap)
        if incumbent is None:
            return Solution(status=SolutionStatus.NODE_LIMIT, stats=stats)
        decoded = _decode(model, _restore(reduction, incumbent), stats)
        decoded.status = SolutionStatus.NODE_LIMIT
        return decoded
    if incumbent is None:
        logger.debug("search exhausted without an integral point after %d nodes", stats.bnb_nodes)
        return Solution(status=SolutionStatus.INFEASIBLE, stats=stats)

    values = _restore(reduction, incumbent)
    logger.debug("%s optimal %.9g: %d nodes, %d LP iterations, %.3fs", model.problem,
                 model.objective_value(values), stats.bnb_nodes, stats.lp_iterations, stats.wall_time)
    return _decode(model, values, stats)


def _restore(reduction: Reduction, x: np.ndarray) -> np.ndarray:
    """Original-space plan from a search point, checked against every original row"""
    values = _finalize(reduction.original, reduction.expand(_finalize(reduction.model, x)))
    if reduction.reduced:
        report = validate_solution(reduction.original, values)
        if not report.ok:
            raise SolverError("expanded plan violates the model", report.summary())
    return values


def brute_force(scenario: Scenario, links: LinkTable, demands: Sequence[float], n_rascs: int = 15,
                serving: str = "anchor", hop_cap: int = 6, max_sites: int = 10, max_flows: int = 2,
                max_combinations: int = 2_000_000) -> Solution:
    """Exhaustive P1 oracle: every combination of simple paths, hop-capped"""
    started = time.perf_counter()
    if scenario.n_sites > max_sites or len(demands) > max_flows:
        raise EnumerationLimitError("instance too large for enumeration",
                                    f"{scenario.n_sites} sites, {len(demands)} flows")
    if not demands or len(demands) != scenario.n_hotspots:
        raise ModelError("one demand per hotspot is required")

    candidates: List[List[Tuple[int, ...]]] = []
    for f, arcs in enumerate(flow_arcs(scenario, links, demands, serving, prune_arcs=False)):
        graph = nx.DiGraph()
        graph.add_edges_from(arcs)
        source = scenario.hotspot_node(f)
        paths = []
        if source in graph and DEPOT_ID in graph:
            paths = [tuple(p) for p in nx.all_simple_paths(graph, source, DEPOT_ID, cutoff=hop_cap)]
        paths.sort(key=lambda p: (len(p), p))
        candidates.append(paths)

    total = math.prod(len(p) for p in candidates)
    if total > max_combinations:
        raise EnumerationLimitError("too many path combinations", str(total))

    min_hops = [len(p[0]) - 1 if p else 0 for p in candidates]
    best_obj = math.inf
    best: Optional[Tuple[Tuple[int, ...], ...]] = None
    load: Dict[Tuple[int, int], float] = {}

    def links_of(path):
        return [(min(a, b), max(a, b)) for a, b in zip(path, path[1:])]

    def search(f: int, chosen: List[Tuple[int, ...]], hops: int, relays: frozenset):
        nonlocal best_obj, best
        if f == len(candidates):
            if len(relays) <= n_rascs and hops + len(relays) < best_obj:
                best_obj = hops + len(relays)
                best = tuple(chosen)
            return
        rest = sum(min_hops[f + 1:])
        for path in candidates[f]:
            path_hops = len(path) - 1
            new_relays = relays | frozenset(path[1:-1])
            if hops + path_hops + rest + len(new_relays) >= best_obj:
                continue
            pairs = links_of(path)
            if any(load.get(pair, 0.0) + demands[f] > links.normalized_capacity(*pair) + 1e-9 for pair in pairs):
                continue
            for pair in pairs:
                load[pair] = load.get(pair, 0.0) + demands[f]
            chosen.append(path)
            search(f + 1, chosen, hops + path_hops, new_relays)
            chosen.pop()
            for pair in pairs:
                load[pair] -= demands[f]

    if all(candidates):
        search(0, [], 0, frozenset())

    stats = SolverStats(wall_time=time.perf_counter() - started)
    if best is None:
        return Solution(status=SolutionStatus.INFEASIBLE, stats=stats)
    relays = sorted({node for path in best for node in path[1:-1]})
    return Solution(status=SolutionStatus.OPTIMAL, objective=float(best_obj),
                    paths=[list(p) for p in best],
                    placements={node: k for k, node in enumerate(relays)}, stats=stats)
