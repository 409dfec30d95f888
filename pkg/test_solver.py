#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Branch-and-bound solver tests, checked against hand-solved layouts and the
path-enumeration oracle
"""

from dataclasses import replace

import numpy as np
import pytest

from conftest import small_grid
from src.channel import build_link_table
from src.config import SolverConfig
from src.energy import energy_breakdown
from src.exceptions import EnumerationLimitError, SolverError
from src.ilp import build_p1, build_p2, validate_solution
from src.scenario import DEPOT_ID, place_hotspots
from src.simplex import INFEASIBLE
from src.solver import SolutionStatus, brute_force, extract_paths, lp_relax, solve


def test_single_hop_corner(corner_instance):
    scenario, links = corner_instance
    model = build_p1(scenario, links, [0.5])
    solution = solve(model)
    assert solution.is_optimal
    assert solution.objective == 3.0
    assert solution.rasc_count == 1
    assert solution.hops == 2
    assert solution.paths == [[16, 15, DEPOT_ID]]
    assert list(solution.placements) == [15]
    assert validate_solution(model, solution.assignment).ok
    assert solution.stats.bnb_nodes >= 1


def test_typical_layout(typical_instance):
    scenario, links = typical_instance
    model = build_p1(scenario, links, [3.0, 3.0, 3.0])
    solution = solve(model)
    assert solution.is_optimal
    assert solution.objective == 15.0
    assert solution.rasc_count == 6
    assert solution.hops == 9
    for f, path in enumerate(solution.paths):
        assert path[0] == scenario.hotspot_node(f)
        assert path[1] == scenario.hotspots[f].anchor
        assert path[-1] == DEPOT_ID
    assert validate_solution(model, solution.assignment).ok


def test_shared_link_capacity(shared_instance):
    scenario, links = shared_instance
    fits = solve(build_p1(scenario, links, [2.4, 2.4]))
    assert fits.objective == 5.0
    assert fits.rasc_count == 1
    assert fits.paths == [[16, 15, DEPOT_ID], [17, 15, DEPOT_ID]]

    split = solve(build_p1(scenario, links, [2.5, 2.5]))
    assert split.objective == 7.0
    assert split.rasc_count == 2
    assert sorted(len(p) for p in split.paths) == [3, 4]
    oracle = brute_force(scenario, links, [2.5, 2.5], max_sites=16, hop_cap=4)
    assert oracle.objective == split.objective


def test_objective_grows_with_demand(shared_instance):
    scenario, links = shared_instance
    previous = 0.0
    for gamma in (1.0, 2.4, 2.5, 3.0):
        solution = solve(build_p1(scenario, links, [gamma, gamma]))
        assert solution.is_optimal
        assert solution.objective >= previous
        previous = solution.objective


def test_objective_is_monotone_in_demand_on_random_instances(channel):
    rng = np.random.default_rng(77)
    grids = [small_grid(1, 2), small_grid(2, 1), small_grid(2, 2)]
    gammas = (0.5, 1.5, 2.4, 3.0, 4.0, 5.0)
    for trial in range(12):
        base = grids[trial % len(grids)]
        n_flows = int(rng.integers(1, 4))
        n_rascs = int(rng.choice([2, 3, 15]))
        scenario = place_hotspots(base, n_flows, 1.0, int(rng.integers(1 << 30)))
        links = build_link_table(scenario, channel)
        previous, blocked = 0.0, False
        for gamma in gammas:
            solution = solve(build_p1(scenario, links, [gamma] * n_flows, n_rascs=n_rascs))
            if blocked:
                assert solution.status is SolutionStatus.INFEASIBLE, f"trial {trial} gamma {gamma}"
            elif solution.is_optimal:
                assert solution.objective >= previous, f"trial {trial} gamma {gamma}"
                previous = solution.objective
            else:
                assert solution.status is SolutionStatus.INFEASIBLE
                blocked = True


def test_lp_bound_below_optimum(shared_instance):
    scenario, links = shared_instance
    model = build_p1(scenario, links, [2.5, 2.5])
    relaxation = lp_relax(model)
    assert relaxation.feasible
    assert relaxation.bound <= solve(model).objective + 1e-9


def test_solve_is_deterministic(shared_instance):
    scenario, links = shared_instance
    model = build_p1(scenario, links, [2.5, 2.5])
    first, second = solve(model), solve(model)
    assert np.array_equal(first.assignment, second.assignment)
    assert first.paths == second.paths
    assert first.stats.bnb_nodes == second.stats.bnb_nodes


def test_pseudo_cost_branching_agrees(shared_instance):
    scenario, links = shared_instance
    model = build_p1(scenario, links, [2.5, 2.5])
    plain = solve(model)
    pseudo = solve(model, SolverConfig(branching="pseudo-cost"))
    assert pseudo.objective == plain.objective
    assert validate_solution(model, pseudo.assignment).ok


def test_node_limit_keeps_a_valid_incumbent(shared_instance):
    scenario, links = shared_instance
    model = build_p1(scenario, links, [2.5, 2.5])
    solution = solve(model, SolverConfig(node_limit=1))
    assert solution.status in (SolutionStatus.OPTIMAL, SolutionStatus.NODE_LIMIT)
    if solution.assignment is not None:
        assert validate_solution(model, solution.assignment).ok
    if solution.status is SolutionStatus.NODE_LIMIT:
        assert solution.stats.gap >= 0


def test_infeasible_root(corner_instance):
    scenario, links = corner_instance
    dead = replace(links, capacity=np.zeros_like(links.capacity), s_eff=np.zeros_like(links.s_eff))
    model = build_p1(scenario, dead, [0.5])
    assert lp_relax(model).status == INFEASIBLE
    solution = solve(model)
    assert solution.status is SolutionStatus.INFEASIBLE
    assert solution.objective is None
    assert brute_force(scenario, dead, [0.5], max_sites=16).status is SolutionStatus.INFEASIBLE


def test_demand_above_peak_rate_is_infeasible(corner_instance):
    scenario, links = corner_instance
    assert solve(build_p1(scenario, links, [5.0])).status is SolutionStatus.INFEASIBLE


def test_rasc_budget(shared_instance):
    scenario, links = shared_instance
    assert solve(build_p1(scenario, links, [2.5, 2.5], n_rascs=1)).status is SolutionStatus.INFEASIBLE
    assert solve(build_p1(scenario, links, [2.5, 2.5], n_rascs=2)).objective == 7.0


def test_p2_with_zero_weight_matches_p1(corner_instance, energy):
    scenario, links = corner_instance
    p1 = solve(build_p1(scenario, links, [0.5]))
    p2 = solve(build_p2(scenario, links, [0.5], 15, energy, energy_weight=0.0))
    assert p2.objective == pytest.approx(p1.objective)
    assert p2.paths == p1.paths


def test_p2_energy_accounting(corner_instance, energy):
    scenario, links = corner_instance
    model = build_p2(scenario, links, [0.5], 15, energy)
    solution = solve(model)
    expected = energy_breakdown(energy, 45.0, 1)
    assert solution.is_optimal
    assert solution.paths == [[16, 15, DEPOT_ID]]
    assert solution.energies[15].e_total == pytest.approx(expected.e_total)
    assert solution.total_energy == pytest.approx(expected.e_total)
    assert solution.objective == pytest.approx(3.0 + 1e-6 * expected.e_total)
    assert validate_solution(model, solution.assignment).ok


def test_p2_keeps_the_p1_count(shared_instance, energy):
    scenario, links = shared_instance
    p1 = solve(build_p1(scenario, links, [2.5, 2.5]))
    p2 = solve(build_p2(scenario, links, [2.5, 2.5], 15, energy))
    assert p2.rasc_count == p1.rasc_count
    assert p2.hops == p1.hops


def test_extract_paths_rejects_broken_flows(corner_instance):
    scenario, links = corner_instance
    model = build_p1(scenario, links, [0.5])
    with pytest.raises(SolverError):
        extract_paths(model, np.zeros(model.num_vars))


def test_oracle_refuses_large_instances(typical_instance):
    scenario, links = typical_instance
    with pytest.raises(EnumerationLimitError):
        brute_force(scenario, links, [3.0, 3.0, 3.0])
    with pytest.raises(EnumerationLimitError):
        brute_force(scenario, links, [3.0, 3.0, 3.0], max_sites=16, max_combinations=10)


def test_matches_oracle_on_random_small_instances(channel):
    rng = np.random.default_rng(2024)
    grids = {shape: small_grid(*shape) for shape in ((1, 1), (1, 2), (1, 3), (2, 1), (3, 1))}
    shapes = list(grids)
    for trial in range(100):
        base = grids[shapes[trial % len(shapes)]]
        n_flows = int(rng.integers(1, 3))
        demand = float(rng.choice([0.5, 1.5, 2.4, 3.0, 4.0]))
        n_rascs = int(rng.choice([1, 2, 3, 15]))
        scenario = place_hotspots(base, n_flows, demand, int(rng.integers(1 << 30)))
        links = build_link_table(scenario, channel)
        demands = [demand] * n_flows

        model = build_p1(scenario, links, demands, n_rascs=n_rascs)
        exact = solve(model)
        oracle = brute_force(scenario, links, demands, n_rascs=n_rascs, hop_cap=scenario.n_sites + 1)
        assert exact.status is oracle.status, f"trial {trial}"
        if exact.is_optimal:
            assert exact.objective == oracle.objective, f"trial {trial}"
            assert validate_solution(model, exact.assignment).ok


@pytest.mark.slow
def test_pruned_and_full_models_agree(typical_instance):
    scenario, links = typical_instance
    demands = [3.0, 3.0, 3.0]
    pruned = solve(build_p1(scenario, links, demands))
    full = solve(build_p1(scenario, links, demands, prune_arcs=False))
    assert pruned.objective == full.objective
