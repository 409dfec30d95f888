#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Demo Script for the RASC Backhaul Planner
Creates sample scenario files, solves them and renders deployment maps
"""

import os

from src.baseline import plan_fsc
from src.channel import build_link_table
from src.config import ChannelParams
from src.ilp import build_p1
from src.render import render_map
from src.scenario import Hotspot, Point2D, generate_manhattan, place_hotspots, save_scenario
from src.solver import solve

GAMMA = 3.0


def typical_layout():
    """Three hotspots near the far corners and the center of the grid"""
    base = generate_manhattan()
    hotspots = [
        Hotspot(0, Point2D(5.0, 140.0), GAMMA, 13),
        Hotspot(1, Point2D(55.0, 50.0), GAMMA, 6),
        Hotspot(2, Point2D(145.0, 10.0), GAMMA, 4),
    ]
    return base.with_hotspots(hotspots)


def create_sample_scenarios(output_dir: str, seeds=(1, 2, 3)):
    """Write random and typical scenarios with their solved maps"""
    os.makedirs(output_dir, exist_ok=True)
    base = generate_manhattan()
    plan = plan_fsc(base, build_link_table(base, ChannelParams()), GAMMA)
    print(f"FSC plan at gamma={GAMMA:g}: {plan.count} sites {list(plan.placements)}")

    scenarios = {"typical": typical_layout()}
    for seed in seeds:
        for n_e in (1, 2, 3):
            scenarios[f"seed{seed}_ne{n_e}"] = place_hotspots(base, n_e, GAMMA, seed)

    for name, scenario in scenarios.items():
        save_scenario(scenario, os.path.join(output_dir, f"{name}.json"))
        links = build_link_table(scenario, ChannelParams())
        demands = [h.demand for h in scenario.hotspots]
        solution = solve(build_p1(scenario, links, demands))
        render_map(scenario, os.path.join(output_dir, f"{name}.png"), solution=solution, plan=plan)
        print(f"Created {name}: {solution.status.value}, {solution.rasc_count} RASCs, "
              f"{solution.hops} hops")

    print(f"\nCreated {len(scenarios)} sample scenarios in {output_dir}")


if __name__ == "__main__":
    # Create sample scenarios in a test directory
    test_dir = "sample_scenarios"

    print("Creating sample scenarios for the RASC planner...")
    print(f"Output directory: {os.path.abspath(test_dir)}")

    create_sample_scenarios(test_dir)

    print("\nTo try the planner:")
    print(f"1. Run: python main.py solve --scenario {os.path.join(test_dir, 'typical.json')} --render map.png")
    print("2. Run: python main.py sweep --trials 5 --out results")
