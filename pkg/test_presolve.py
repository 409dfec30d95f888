#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Presolve tests - RASC label aggregation, energy folding and optimum preservation
"""

from dataclasses import replace

import numpy as np
import pytest

from conftest import small_grid
from src.channel import build_link_table
from src.config import SolverConfig
from src.ilp import Constraint, VarKind, build_p1, build_p2, validate_solution
from src.presolve import presolve
from src.scenario import place_hotspots
from src.solver import solve

PLAIN = SolverConfig(presolve=False, warm_start=False)


def relabel(model, perm):
    """Same model with RASC k renamed perm[k] on placement and energy columns"""
    columns = tuple(replace(v, key=(v.key[0], perm[v.key[1]])) if v.kind in (VarKind.X, VarKind.E) else v
                    for v in model.columns)
    return replace(model, columns=columns)


def test_one_activation_column_per_site(typical_instance):
    scenario, links = typical_instance
    model = build_p1(scenario, links, [3.0, 3.0, 3.0])
    reduction = presolve(model)
    assert reduction.reduced
    reduced = reduction.model
    sites = [v.key for v in reduced.columns_of(VarKind.X)]
    assert sites == [(i,) for i in model.relay_sites]
    assert len(reduced.columns_of(VarKind.Y)) == len(model.columns_of(VarKind.Y))
    tags = {row.tag for row in reduced.constraints}
    assert "4a" not in tags and "4b" not in tags
    assert reduced.objective_is_integral


def test_rasc_budget_becomes_one_row(shared_instance):
    scenario, links = shared_instance
    reduced = presolve(build_p1(scenario, links, [2.5, 2.5], n_rascs=2)).model
    budget = [row for row in reduced.constraints if row.tag == "4b"]
    assert len(budget) == 1
    assert budget[0].rhs == 2.0
    assert len(budget[0].cols) == len(reduced.relay_sites)


def test_energy_rows_fold_into_costs(corner_instance, energy):
    scenario, links = corner_instance
    model = build_p2(scenario, links, [0.5], 15, energy)
    reduced = presolve(model).model
    assert not reduced.columns_of(VarKind.E)
    assert not [row for row in reduced.constraints if row.tag == "8"]
    fly, grasp = model.site_fixed_energy[15]
    site = next(v for v in reduced.columns_of(VarKind.X) if v.key == (15,))
    assert reduced.objective[site.column] == pytest.approx(1.0 + 1e-6 * (fly + grasp))
    relay_arc = next(v for v in reduced.columns_of(VarKind.Y) if v.key[0] == 15)
    assert reduced.objective[relay_arc.column] == pytest.approx(1.0 + 1e-6 * model.comm_energy_per_flow)


def test_unfamiliar_rows_keep_the_model(shared_instance):
    scenario, links = shared_instance
    model = build_p1(scenario, links, [2.4, 2.4])
    extra = Constraint("r_extra", "cut", (0,), (1.0,), "<=", 1.0)
    odd = replace(model, constraints=model.constraints + (extra,))
    reduction = presolve(odd)
    assert not reduction.reduced
    assert reduction.model is odd
    assert solve(odd).objective == 5.0


def test_expanded_plan_numbers_rascs_by_site(typical_instance):
    scenario, links = typical_instance
    model = build_p1(scenario, links, [3.0, 3.0, 3.0])
    solution = solve(model)
    assert solution.objective == 15.0
    sites = sorted(solution.placements)
    assert [solution.placements[i] for i in sites] == list(range(len(sites)))
    assert validate_solution(model, solution.assignment).ok


@pytest.mark.parametrize("demands", [[2.4, 2.4], [2.5, 2.5], [3.0, 3.0]])
def test_presolve_preserves_p1_and_p2_optima(shared_instance, energy, demands):
    scenario, links = shared_instance
    for model in (build_p1(scenario, links, demands), build_p2(scenario, links, demands, 15, energy)):
        fast = solve(model)
        plain = solve(model, PLAIN)
        assert fast.status is plain.status
        assert fast.objective == pytest.approx(plain.objective, rel=1e-12, abs=1e-9)
        assert fast.rasc_count == plain.rasc_count
        assert validate_solution(model, fast.assignment).ok


def test_presolve_preserves_optima_on_random_small_instances(channel, energy):
    rng = np.random.default_rng(99)
    grids = [small_grid(1, 2), small_grid(2, 1), small_grid(2, 2)]
    for trial in range(24):
        base = grids[trial % len(grids)]
        n_flows = int(rng.integers(1, 4))
        demand = float(rng.choice([0.5, 1.5, 2.4, 3.0]))
        n_rascs = int(rng.choice([1, 2, 3]))
        scenario = place_hotspots(base, n_flows, demand, int(rng.integers(1 << 30)))
        links = build_link_table(scenario, channel)
        demands = [demand] * n_flows
        for model in (build_p1(scenario, links, demands, n_rascs=n_rascs),
                      build_p2(scenario, links, demands, n_rascs, energy)):
            fast = solve(model)
            plain = solve(model, PLAIN)
            assert fast.status is plain.status, f"trial {trial} {model.problem}"
            if fast.is_optimal:
                assert fast.objective == pytest.approx(plain.objective, rel=1e-12, abs=1e-9), f"trial {trial}"
                assert validate_solution(model, fast.assignment).ok


def test_rasc_labels_are_interchangeable(shared_instance, energy):
    scenario, links = shared_instance
    perm = [int(k) for k in np.random.default_rng(5).permutation(15)]
    for model in (build_p1(scenario, links, [2.5, 2.5]), build_p2(scenario, links, [2.5, 2.5], 15, energy)):
        shuffled = relabel(model, perm)
        base = solve(model)
        assert presolve(shuffled).reduced
        for config in (SolverConfig(), PLAIN):
            moved = solve(shuffled, config)
            assert moved.objective == pytest.approx(base.objective, rel=1e-12, abs=1e-9)
            assert moved.rasc_count == base.rasc_count
            assert validate_solution(shuffled, moved.assignment).ok


def test_permuting_rascs_of_an_optimum_stays_optimal(typical_instance):
    scenario, links = typical_instance
    model = build_p1(scenario, links, [3.0, 3.0, 3.0])
    solution = solve(model)
    cols = model.column_map()
    perm = np.random.default_rng(3).permutation(model.n_rascs)
    moved = solution.assignment.copy()
    for var in model.columns_of(VarKind.X):
        moved[var.column] = 0.0
    for site, k in solution.placements.items():
        moved[cols[(VarKind.X, (site, int(perm[k])))]] = 1.0
    report = validate_solution(model, moved)
    assert report.ok
    assert report.objective == solution.objective


def test_warm_and_cold_searches_agree(typical_instance):
    scenario, links = typical_instance
    model = build_p1(scenario, links, [3.0, 3.0, 3.0])
    warm = solve(model)
    cold = solve(model, SolverConfig(warm_start=False))
    assert warm.objective == cold.objective == 15.0
