#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Fixed Small Cell Baseline
Minimum static lamppost placement that covers every candidate hotspot location,
stays connected to the depot and carries the worst realization of hotspots on
distinct anchors, plus routing of hotspot flows over it
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .channel import MIN_LINK_DISTANCE, LinkTable, serving_range
from .config import ChannelParams, SolverConfig
from .exceptions import InfeasibleError, ModelError
from .ilp import build_p1
from .scenario import DEPOT_ID, Scenario, segments_clear
from .solver import Solution, SolutionStatus, solve

logger = logging.getLogger(__name__)

SAMPLE_STEP = 2.5
ROBUST_FLOWS = 3


@dataclass(frozen=True)
class FscPlan:
    """Static placement for one demand level"""
    placements: Tuple[int, ...]
    gamma: float
    coverage_radius: float
    counts: Dict[float, int] = field(default_factory=dict, compare=False)
    n_samples: int = 0
    robust_flows: int = 0

    @property
    def count(self) -> int:
        return len(self.placements)

    def as_dict(self) -> Dict:
        return {"placements": list(self.placements), "gamma": self.gamma, "count": self.count,
                "coverage_radius": self.coverage_radius, "robust_flows": self.robust_flows,
                "counts": {f"{g:g}": c for g, c in sorted(self.counts.items())}}


@dataclass
class FscEvaluation:
    """Routing of one hotspot realization over a fixed plan"""
    feasible: bool
    paths: List[List[int]] = field(default_factory=list)
    failed_flows: List[int] = field(default_factory=list)
    used_sites: Tuple[int, ...] = ()
    solution: Optional[Solution] = None


def sample_hotspot_region(scenario: Scenario, radius: Optional[float] = None,
                          step: float = SAMPLE_STEP) -> np.ndarray:
    """Grid points inside the lamppost vicinity disks, outside buildings and inside the area"""
    if radius is None:
        radius = scenario.params.vicinity_radius
    ticks = np.arange(-radius, radius + 1e-9, step)
    dx, dy = np.meshgrid(ticks, ticks)
    disk = dx ** 2 + dy ** 2 <= radius ** 2 + 1e-9
    offsets = np.column_stack([dx[disk], dy[disk]])

    points = np.vstack([offsets + np.array(s.position.as_tuple()) for s in scenario.lampposts])
    points = np.unique(np.round(points, 6), axis=0)
    inside = (points[:, 0] >= 0) & (points[:, 0] <= scenario.area[0]) & \
             (points[:, 1] >= 0) & (points[:, 1] <= scenario.area[1])
    rects = scenario.building_array()
    if rects.shape[0]:
        in_building = ((points[:, None, 0] > rects[None, :, 0]) & (points[:, None, 0] < rects[None, :, 2]) &
                       (points[:, None, 1] > rects[None, :, 1]) & (points[:, None, 1] < rects[None, :, 3])).any(axis=1)
        inside &= ~in_building
    return points[inside]


def coverage_matrix(scenario: Scenario, points: np.ndarray, params: ChannelParams,
                    gamma: float) -> np.ndarray:
    """(points x lampposts) flags: LoS and access efficiency at least gamma"""
    reach = serving_range(params, gamma)
    lampposts = scenario.lampposts
    cover = np.zeros((points.shape[0], len(lampposts)), dtype=bool)
    rects = scenario.building_array()
    for col, site in enumerate(lampposts):
        anchor = np.array(site.position.as_tuple())
        d = np.maximum(np.hypot(points[:, 0] - anchor[0], points[:, 1] - anchor[1]), MIN_LINK_DISTANCE)
        near = d <= reach
        if near.any():
            clear = segments_clear(points[near], np.repeat(anchor[None, :], int(near.sum()), axis=0), rects)
            cover[np.flatnonzero(near)[clear], col] = True
    return cover


def backhaul_graph(scenario: Scenario, links: LinkTable, gamma: float) -> nx.Graph:
    """Site graph whose edges carry at least gamma"""
    graph = nx.Graph()
    graph.add_nodes_from(range(scenario.n_sites))
    for i in range(scenario.n_sites):
        for j in range(i + 1, scenario.n_sites):
            if links.usable(i, j) and links.normalized_capacity(i, j) >= gamma:
                graph.add_edge(i, j)
    return graph


def _connected(graph: nx.Graph, members: Sequence[int]) -> bool:
    sub = graph.subgraph(list(members) + [DEPOT_ID])
    return len(nx.node_connected_component(sub, DEPOT_ID)) == len(members) + 1


class _CarryCheck:
    """Whether a placement carries every n_flows hotspots on distinct anchors at once

    Each hotspot sits on its anchor lamppost and attaches to placed lampposts
    in LoS within serving range; backhaul links carry floor(s_eff / gamma)
    flows. Realizations that already sank a candidate are tried first.
    """

    def __init__(self, scenario: Scenario, links: LinkTable, gamma: float, n_flows: int):
        self.gamma = gamma
        lampposts = [s.id for s in scenario.lampposts]
        self.n_flows = min(n_flows, len(lampposts))
        self.realizations = list(itertools.combinations(lampposts, self.n_flows)) if self.n_flows > 0 else []
        self.attach = {a: {a} | {s for s in lampposts if s != a and links.usable(a, s)
                                 and links.normalized_capacity(a, s) >= gamma}
                       for a in lampposts}
        self.trunks: List[Tuple[int, int, int]] = []
        for i in range(scenario.n_sites):
            for j in range(i + 1, scenario.n_sites):
                if links.usable(i, j):
                    flows = math.floor(links.normalized_capacity(i, j) / gamma + 1e-9)
                    if flows > 0:
                        self.trunks.append((i, j, flows))
        self.witnesses: List[Tuple[int, ...]] = []

    def carries(self, members: Sequence[int]) -> bool:
        if not self.realizations:
            return True
        placed = set(members)
        network = nx.DiGraph()
        for i, j, flows in self.trunks:
            if (i in placed or i == DEPOT_ID) and (j in placed or j == DEPOT_ID):
                network.add_edge(i, j, capacity=flows)
                network.add_edge(j, i, capacity=flows)
        for realization in self.witnesses:
            if not self._routes(network, placed, realization):
                return False
        for realization in self.realizations:
            if realization in self.witnesses:
                continue
            if not self._routes(network, placed, realization):
                self.witnesses.insert(0, realization)
                logger.debug("anchors %s sink placement %s", realization, sorted(placed))
                return False
        return True

    def _routes(self, network: nx.DiGraph, placed: set, anchors: Tuple[int, ...]) -> bool:
        graph = network.copy()
        for f, a in enumerate(anchors):
            hotspot = ("hotspot", f)
            graph.add_edge("source", hotspot, capacity=1)
            for s in self.attach[a] & placed:
                graph.add_edge(hotspot, s, capacity=1)
        if DEPOT_ID not in graph:
            return False
        return nx.maximum_flow_value(graph, "source", DEPOT_ID) >= len(anchors)


def plan_fsc(scenario: Scenario, links: LinkTable, gamma: float,
             params: Optional[ChannelParams] = None, step: float = SAMPLE_STEP,
             n_flows: int = ROBUST_FLOWS) -> FscPlan:
    """Exact minimum-cardinality lamppost subset that covers, reaches the depot and carries n_flows

    n_flows=0 drops the capacity requirement and keeps coverage and connectivity only.
    """
    if params is None:
        params = ChannelParams()
    if not gamma > 0:
        raise ModelError("demand level must be positive", str(gamma))
    if n_flows < 0:
        raise ModelError("robust flow count must be non-negative", str(n_flows))
    lampposts = [s.id for s in scenario.lampposts]
    if len(lampposts) > 20:
        raise ModelError("too many lampposts for subset enumeration", str(len(lampposts)))
    radius = serving_range(params, gamma)
    if gamma > params.max_spectral_efficiency:
        raise InfeasibleError("demand exceeds the maximum spectral efficiency",
                              f"gamma={gamma} > {params.max_spectral_efficiency}")

    points = sample_hotspot_region(scenario, step=step)
    cover = coverage_matrix(scenario, points, params, gamma)
    weights = np.left_shift(1, np.arange(len(lampposts), dtype=np.int64))
    masks = np.unique(cover.astype(np.int64) @ weights)
    if masks.size and masks[0] == 0:
        raise InfeasibleError("some candidate hotspot locations cannot be covered",
                              f"gamma={gamma}, serving range {radius:.1f} m")

    graph = backhaul_graph(scenario, links, gamma)
    carry = _CarryCheck(scenario, links, gamma, n_flows)
    subsets = np.arange(1, 1 << len(lampposts), dtype=np.int64)
    sizes = np.array([bin(int(s)).count("1") for s in subsets])
    covering = np.all((subsets[:, None] & masks[None, :]) != 0, axis=1)

    for size in range(1, len(lampposts) + 1):
        for subset in subsets[covering & (sizes == size)]:
            members = [lampposts[b] for b in range(len(lampposts)) if int(subset) >> b & 1]
            if _connected(graph, members) and carry.carries(members):
                logger.debug("FSC plan at gamma=%g: %d sites %s", gamma, size, members)
                return FscPlan(placements=tuple(members), gamma=gamma, coverage_radius=radius,
                               counts={gamma: size}, n_samples=int(points.shape[0]),
                               robust_flows=carry.n_flows)
    raise InfeasibleError("no lamppost subset covers the region, reaches the depot and carries the flows",
                          f"gamma={gamma}")


def fsc_count_table(scenario: Scenario, links: LinkTable, gammas: Sequence[float],
                    params: Optional[ChannelParams] = None,
                    n_flows: int = ROBUST_FLOWS) -> Dict[float, Optional[int]]:
    """FSC count per demand level; None where no plan exists"""
    table: Dict[float, Optional[int]] = {}
    for gamma in gammas:
        try:
            table[gamma] = plan_fsc(scenario, links, gamma, params, n_flows=n_flows).count
        except InfeasibleError as e:
            logger.info("no FSC plan at gamma=%g: %s", gamma, e)
            table[gamma] = None
    return table


def evaluate_fsc(plan: FscPlan, scenario: Scenario, links: LinkTable, demands: Sequence[float],
                 config: Optional[SolverConfig] = None) -> FscEvaluation:
    """Route every hotspot flow over the fixed placements"""
    if scenario.n_hotspots == 0:
        return FscEvaluation(feasible=True)
    n_rascs = max(1, plan.count)
    model = build_p1(scenario, links, demands, n_rascs, serving="los", fixed_sites=plan.placements)
    solution = solve(model, config)
    if solution.is_optimal:
        used = sorted({node for path in solution.paths for node in path[1:-1]})
        return FscEvaluation(feasible=True, paths=solution.paths, used_sites=tuple(used),
                             solution=solution)

    failed = []
    for f in range(scenario.n_hotspots):
        single = scenario.with_hotspots([scenario.hotspots[f]])
        alone = solve(build_p1(single, _subtable(links, scenario, f), [demands[f]], n_rascs,
                               serving="los", fixed_sites=plan.placements), config)
        if alone.status is not SolutionStatus.OPTIMAL:
            failed.append(f)
    logger.info("fixed plan cannot carry the realization, failing flows %s", failed)
    return FscEvaluation(feasible=False, failed_flows=failed, solution=solution)


def _subtable(links: LinkTable, scenario: Scenario, flow: int) -> LinkTable:
    """Link table restricted to the sites plus one hotspot"""
    keep = list(range(scenario.n_sites)) + [scenario.hotspot_node(flow)]
    index = np.ix_(keep, keep)
    return LinkTable(los=links.los[index], distance=links.distance[index], snr=links.snr[index],
                     s_eff=links.s_eff[index], capacity=links.capacity[index],
                     bandwidth=links.bandwidth, n_sites=links.n_sites)
