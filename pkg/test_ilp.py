#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Integer program assembly and solution validation tests
"""

from collections import Counter

import numpy as np
import pytest

from conftest import small_grid
from src.channel import build_link_table
from src.energy import comm_energy, grasp_energy, travel_energy
from src.exceptions import ModelError
from src.ilp import (EQ, GE, VarKind, build_p1, build_p2, flow_arcs, to_lp_format, validate_solution)
from src.scenario import DEPOT_ID, Hotspot, Point2D


@pytest.fixture
def one_block(channel):
    """1x1 grid: depot 0 (45,45), lampposts 1 (5,5), 2 (45,5), 3 (5,45); hotspot 4 next to lamppost 2"""
    scenario = small_grid(1, 1).with_hotspots([Hotspot(0, Point2D(45.0, 20.0), 1.0, 2)])
    return scenario, build_link_table(scenario, channel)


def assignment_for(model, y_arcs, x_keys, extra=None):
    values = np.zeros(model.num_vars)
    cols = model.column_map()
    for key in y_arcs:
        values[cols[(VarKind.Y, key)]] = 1.0
    for key in x_keys:
        values[cols[(VarKind.X, key)]] = 1.0
    for (kind, key), v in (extra or {}).items():
        values[cols[(kind, key)]] = v
    return values


def test_one_block_layout(one_block):
    scenario, links = one_block
    arcs = flow_arcs(scenario, links, [1.0])
    assert arcs == [[(4, 2), (1, 2), (1, 3), (2, 1), (2, DEPOT_ID), (3, 1), (3, DEPOT_ID)]]


def test_p1_counts(one_block):
    scenario, links = one_block
    model = build_p1(scenario, links, [1.0], n_rascs=3)
    assert model.problem == "p1"
    assert len(model.columns_of(VarKind.Y)) == 7
    assert len(model.columns_of(VarKind.X)) == 9
    assert model.num_vars == 16
    tags = Counter(row.tag for row in model.constraints)
    assert tags == {"2a": 1, "2b": 1, "2c": 3, "4a": 3, "4b": 3, "4c": 6, "6c": 5}
    assert model.num_rows == 22
    assert model.objective_is_integral
    assert all(model.binary)


def test_column_order_and_names(one_block):
    scenario, links = one_block
    model = build_p1(scenario, links, [1.0], n_rascs=3)
    kinds = [v.kind for v in model.columns]
    assert kinds == [VarKind.Y] * 7 + [VarKind.X] * 9
    assert [v.column for v in model.columns] == list(range(16))
    assert model.columns[0].name == "y_4_2_0"
    assert model.columns[7].name == "x_1_0"
    assert model.constraints[0].name == "r0_2a"


def test_flow_rows_per_flow(typical_instance):
    scenario, links = typical_instance
    model = build_p1(scenario, links, [3.0, 3.0, 3.0])
    tags = Counter(row.tag for row in model.constraints)
    assert tags["2a"] == 3
    assert tags["2b"] == 3
    assert tags["4a"] == 15
    assert tags["4b"] == 15
    for row in model.constraints:
        if row.tag in ("2a", "2b"):
            assert row.sense == EQ and row.rhs == 1.0
        if row.tag == "4c":
            assert row.sense == GE and row.rhs == 0.0


def test_build_is_deterministic(typical_instance):
    scenario, links = typical_instance
    first = build_p1(scenario, links, [3.0, 3.0, 3.0])
    second = build_p1(scenario, links, [3.0, 3.0, 3.0])
    assert first == second
    assert to_lp_format(first) == to_lp_format(second)


def test_pruning_drops_only_thin_links(typical_instance):
    scenario, links = typical_instance
    pruned = build_p1(scenario, links, [3.0, 3.0, 3.0])
    full = build_p1(scenario, links, [3.0, 3.0, 3.0], prune_arcs=False)
    pruned_keys = {v.key for v in pruned.columns_of(VarKind.Y)}
    full_keys = {v.key for v in full.columns_of(VarKind.Y)}
    assert pruned_keys < full_keys
    for i, j, _ in full_keys - pruned_keys:
        assert links.normalized_capacity(i, j) < 3.0


def test_los_serving_rule_reaches_every_visible_lamppost(typical_instance):
    scenario, links = typical_instance
    model = build_p1(scenario, links, [3.0, 3.0, 3.0], serving="los", prune_arcs=False)
    first_hops = {v.key[1] for v in model.columns_of(VarKind.Y) if v.key[0] == scenario.hotspot_node(0)}
    assert 13 in first_hops
    assert len(first_hops) > 1
    assert all(links.los[scenario.hotspot_node(0), j] for j in first_hops)


def test_valid_plan_passes(one_block):
    scenario, links = one_block
    model = build_p1(scenario, links, [1.0], n_rascs=3)
    values = assignment_for(model, [(4, 2, 0), (2, DEPOT_ID, 0)], [(2, 0)])
    report = validate_solution(model, values)
    assert report.ok
    assert report.objective == 3.0
    assert report.summary() == "ok objective=3"


def test_rasc_permutation_is_equivalent(one_block):
    scenario, links = one_block
    model = build_p1(scenario, links, [1.0], n_rascs=3)
    for k in range(3):
        report = validate_solution(model, assignment_for(model, [(4, 2, 0), (2, DEPOT_ID, 0)], [(2, k)]))
        assert report.ok
        assert report.objective == 3.0


def test_violations_are_reported(one_block):
    scenario, links = one_block
    model = build_p1(scenario, links, [1.0], n_rascs=3)

    empty = validate_solution(model, np.zeros(model.num_vars))
    assert not empty.ok
    assert {v.tag for v in empty.violations} == {"2a", "2b"}

    unplaced = validate_solution(model, assignment_for(model, [(4, 2, 0), (2, DEPOT_ID, 0)], []))
    assert [v.tag for v in unplaced.violations] == ["4c"]

    doubled = assignment_for(model, [(4, 2, 0), (2, DEPOT_ID, 0)], [(2, 0), (2, 1)])
    assert "4a" in {v.tag for v in validate_solution(model, doubled).violations}

    fractional = assignment_for(model, [(4, 2, 0), (2, DEPOT_ID, 0)], [(2, 0)])
    fractional[model.column_map()[(VarKind.X, (2, 0))]] = 0.5
    fractional[model.column_map()[(VarKind.X, (2, 1))]] = 0.5
    tags = {v.tag for v in validate_solution(model, fractional).violations}
    assert "integrality" in tags

    with pytest.raises(ModelError):
        validate_solution(model, np.zeros(3))


def test_capacity_violation_under_a_larger_demand(shared_instance):
    scenario, links = shared_instance
    loose = build_p1(scenario, links, [2.4, 2.4], prune_arcs=False)
    tight = build_p1(scenario, links, [2.5, 2.5], prune_arcs=False)
    assert [v.key for v in loose.columns] == [v.key for v in tight.columns]
    shared = [(16, 15, 0), (15, DEPOT_ID, 0), (17, 15, 1), (15, DEPOT_ID, 1)]
    values = assignment_for(loose, shared, [(15, 0)])
    assert validate_solution(loose, values).ok
    report = validate_solution(tight, values)
    assert not report.ok
    assert [v.tag for v in report.violations] == ["6c"]


def test_fixed_sites(one_block):
    scenario, links = one_block
    model = build_p1(scenario, links, [1.0], n_rascs=2, fixed_sites=[2, 3])
    assert model.relay_sites == (2, 3)
    assert {v.key[0] for v in model.columns_of(VarKind.X)} == {2, 3}
    assert Counter(row.tag for row in model.constraints)["fix"] == 2
    with pytest.raises(ModelError):
        build_p1(scenario, links, [1.0], fixed_sites=[DEPOT_ID])


def test_p2_energy_columns(one_block, energy):
    scenario, links = one_block
    model = build_p2(scenario, links, [1.0], 3, energy)
    assert model.problem == "p2"
    assert len(model.columns_of(VarKind.E)) == 9
    assert Counter(row.tag for row in model.constraints)["8"] == 9
    assert not model.objective_is_integral
    assert model.comm_energy_per_flow == pytest.approx(comm_energy(energy))
    fly, grasp = model.site_fixed_energy[2]
    assert fly == pytest.approx(travel_energy(energy, 40.0))
    assert grasp == pytest.approx(grasp_energy(energy))

    e_value = fly + grasp + comm_energy(energy)
    values = assignment_for(model, [(4, 2, 0), (2, DEPOT_ID, 0)], [(2, 0)], {(VarKind.E, (2, 0)): e_value})
    report = validate_solution(model, values)
    assert report.ok
    assert report.objective == pytest.approx(3.0 + 1e-6 * e_value)

    short = values.copy()
    short[model.column_map()[(VarKind.E, (2, 0))]] = e_value - 100.0
    assert [v.tag for v in validate_solution(model, short).violations] == ["8"]


def test_bad_inputs(one_block, energy):
    scenario, links = one_block
    with pytest.raises(ModelError):
        build_p1(scenario, links, [])
    with pytest.raises(ModelError):
        build_p1(scenario, links, [1.0, 1.0])
    with pytest.raises(ModelError):
        build_p1(scenario, links, [0.0])
    with pytest.raises(ModelError):
        build_p1(scenario, links, [1.0], n_rascs=0)
    with pytest.raises(ModelError):
        build_p1(scenario, links, [1.0], serving="nearest")
    with pytest.raises(ModelError):
        build_p2(scenario, links, [1.0], 3, energy, energy_weight=-1.0)


def test_lp_format(one_block, energy):
    scenario, links = one_block
    text = to_lp_format(build_p1(scenario, links, [1.0], n_rascs=3))
    lines = text.splitlines()
    assert lines[0].startswith("\\ P1 model, 16 columns, 22 rows")
    assert lines[1] == "Minimize"
    assert " r0_2a: + 1 y_4_2_0 = 1" in lines
    assert "Binaries" in lines and lines[-1] == "End"
    assert "Bounds" in lines

    p2 = to_lp_format(build_p2(scenario, links, [1.0], 3, energy))
    assert " E_2_0 >= 0" in p2.splitlines()
