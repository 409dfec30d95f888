#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Command-Line Interface
Subcommands generate, solve, baseline, sweep and validate; errors map to
documented exit codes
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from PyQt5.QtCore import QCoreApplication

from .baseline import fsc_count_table, plan_fsc
from .bench import SweepWorker, write_results
from .channel import build_link_table
from .config import BRANCHING_RULES, SERVING_RULES, ExperimentConfig, load_config, with_overrides
from .exceptions import ConfigError, InfeasibleError, PlannerError, SolverError, ValidationError
from .ilp import build_p1, build_p2, validate_solution
from .render import render_map
from .report import (assignment_vector, load_solution, print_solution_csv, solution_to_dict, write_lp,
                     write_solution_csv, write_solution_json)
from .scenario import (generate_manhattan, load_scenario, place_hotspots, save_scenario, scenario_from_dict,
                       scenario_to_dict)
from .solver import SolutionStatus, solve

logger = logging.getLogger(__name__)

EXIT_OK = 0


def setup_logging(verbose: bool = False, quiet: bool = False):
    """Root logger on stderr so stdout stays machine-readable"""
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    common.add_argument("--quiet", "-q", action="store_true", help="errors only")

    instance = argparse.ArgumentParser(add_help=False)
    instance.add_argument("--gamma", type=float, default=3.0, help="per-flow demand in bps/Hz")
    instance.add_argument("--flows", type=int, default=1, help="number of hotspots N_E")
    instance.add_argument("--scenario", help="scenario JSON to use instead of generating one")
    instance.add_argument("--render", help="write a PNG map to this path")

    parser = argparse.ArgumentParser(prog="rasc-planner",
                                     description="Robotic aerial small cell backhaul planner")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common, instance], help="write a scenario file")

    p = sub.add_parser("solve", parents=[common, instance], help="solve one instance")
    p.add_argument("--problem", choices=["p1", "p2"], default="p1")
    p.add_argument("--serving", choices=SERVING_RULES)
    p.add_argument("--branching", choices=BRANCHING_RULES)
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.add_argument("--lp", help="also dump the model in LP format to this path")

    p = sub.add_parser("baseline", parents=[common, instance], help="FSC plan for one demand level")
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.add_argument("--table", action="store_true", help="count table over the configured gamma grid")

    p = sub.add_parser("sweep", parents=[common], help="full Monte Carlo sweep")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--serving", choices=SERVING_RULES)
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("validate", parents=[common], help="check a solution file against its model")
    p.add_argument("--solution", required=True, help="solution JSON written by solve")
    return parser


def _experiment(args) -> ExperimentConfig:
    config = load_config(args.config)
    return with_overrides(config,
                          master_seed=args.seed,
                          output_dir=args.out,
                          trials=getattr(args, "trials", None),
                          workers=getattr(args, "workers", None),
                          serving=getattr(args, "serving", None))


def _instance(args, config: ExperimentConfig):
    """Scenario with hotspots, from --scenario or generated from the seed"""
    if args.scenario:
        scenario = load_scenario(args.scenario, config.scenario)
        if scenario.n_hotspots == 0:
            scenario = place_hotspots(scenario, args.flows, args.gamma, config.master_seed)
        return scenario
    if args.flows < 1:
        raise ConfigError("--flows must be at least 1", str(args.flows))
    return place_hotspots(generate_manhattan(config.scenario), args.flows, args.gamma, config.master_seed)


def _emit(data, path: Optional[str]):
    text = json.dumps(data, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def cmd_generate(args, config: ExperimentConfig) -> int:
    scenario = _instance(args, config)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "scenario.json")
        save_scenario(scenario, path)
        print(path)
    else:
        _emit(scenario_to_dict(scenario), None)
    if args.render:
        render_map(scenario, args.render)
    return EXIT_OK


def cmd_solve(args, config: ExperimentConfig) -> int:
    if args.branching:
        config = with_overrides(config, solver=replace(config.solver, branching=args.branching))
    scenario = _instance(args, config)
    links = build_link_table(scenario, config.channel)
    demands = [h.demand for h in scenario.hotspots]
    if args.problem == "p2":
        model = build_p2(scenario, links, demands, config.n_rascs, config.energy, config.energy_weight,
                         config.serving, config.prune_arcs)
    else:
        model = build_p1(scenario, links, demands, config.n_rascs, config.serving, config.prune_arcs)
    if args.lp:
        write_lp(args.lp, model)

    solution = solve(model, config.solver)
    if solution.status is SolutionStatus.INFEASIBLE:
        raise InfeasibleError("instance has no feasible plan",
                              f"{len(demands)} flow(s) at gamma={args.gamma:g}")
    if solution.assignment is None:
        raise SolverError("node limit reached before any feasible plan was found",
                          f"node_limit={config.solver.node_limit}")
    data = solution_to_dict(solution, model, scenario, prune_arcs=config.prune_arcs,
                            seed=config.master_seed)

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        if args.format == "csv":
            path = os.path.join(args.out, "solution.csv")
            write_solution_csv(path, solution, scenario)
        else:
            path = os.path.join(args.out, "solution.json")
            write_solution_json(path, data)
        print(path)
    elif args.format == "csv":
        print_solution_csv(solution, scenario)
    else:
        _emit(data, None)
    if args.render:
        render_map(scenario, args.render, solution=solution)
    if solution.status is SolutionStatus.NODE_LIMIT:
        logger.warning("search stopped at the node limit; the plan may not be optimal")
    return EXIT_OK


def cmd_baseline(args, config: ExperimentConfig) -> int:
    scenario = load_scenario(args.scenario, config.scenario) if args.scenario \
        else generate_manhattan(config.scenario)
    base = scenario.with_hotspots([])
    links = build_link_table(base, config.channel)

    if args.table:
        table = fsc_count_table(base, links, config.gammas, config.channel, n_flows=max(config.n_e_values))
        rows = [{"gamma": g, "fsc_count": c} for g, c in table.items()]
        if args.format == "csv" or args.out:
            lines = ["gamma,fsc_count"] + [f"{g:g},{'' if c is None else c}" for g, c in table.items()]
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                path = os.path.join(args.out, "fsc_counts.csv")
                with open(path, "w", encoding="utf-8") as f:
                    f.write("\n".join(lines) + "\n")
                print(path)
            else:
                print("\n".join(lines))
        else:
            _emit(rows, None)
        return EXIT_OK

    plan = plan_fsc(base, links, args.gamma, config.channel, n_flows=max(config.n_e_values))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "fsc_plan.json")
        _emit(plan.as_dict(), path)
        print(path)
    elif args.format == "csv":
        print("gamma,count,placements")
        print(f"{plan.gamma:g},{plan.count},{' '.join(str(s) for s in plan.placements)}")
    else:
        _emit(plan.as_dict(), None)
    if args.render:
        render_map(scenario, args.render, plan=plan)
    return EXIT_OK


def cmd_sweep(args, config: ExperimentConfig) -> int:
    app = QCoreApplication.instance() or QCoreApplication([])
    worker = SweepWorker(config)
    errors: List[str] = []
    step = {"every": 1}

    def on_started(total: int):
        step["every"] = max(1, total // 20)

    def on_progress(done: int, total: int):
        if done % step["every"] == 0 or done == total:
            print(f"progress {done}/{total}", file=sys.stderr)

    worker.sweep_started.connect(on_started)
    worker.progress_updated.connect(on_progress)
    worker.error_occurred.connect(lambda message, detail: errors.append(f"{message} ({detail})"))
    worker.finished.connect(app.quit)
    worker.start_sweep()
    if not worker.isFinished():
        app.exec_()
    worker.wait()
    # deliver signals still queued from the worker thread
    app.processEvents()

    if errors or worker.result is None:
        raise PlannerError("sweep failed", errors[0] if errors else "no result")
    paths = write_results(worker.result, config.output_dir)
    key = "summary.json" if args.format == "json" else "trials.csv"
    print(paths[key])
    failed = sum(1 for r in worker.result.rows if r.status != "ok")
    if failed:
        logger.warning("%d trial(s) did not finish with status ok", failed)
    return EXIT_OK


def cmd_validate(args, config: ExperimentConfig) -> int:
    data = load_solution(args.solution)
    scenario = scenario_from_dict(data["scenario"], config.scenario)
    links = build_link_table(scenario, config.channel)
    demands = data["demands"]
    serving = data.get("serving", config.serving)
    prune = bool(data.get("prune_arcs", config.prune_arcs))
    if data["problem"] == "p2":
        try:
            weight = float(data.get("energy_weight", config.energy_weight))
        except (TypeError, ValueError) as e:
            raise ValidationError("solution file has a malformed energy weight", str(e))
        model = build_p2(scenario, links, demands, data["n_rascs"], config.energy, weight, serving, prune)
    else:
        model = build_p1(scenario, links, demands, data["n_rascs"], serving, prune)

    report = validate_solution(model, assignment_vector(model, data["assignment"]))
    recorded = data.get("objective")
    if report.ok and recorded is not None and abs(float(recorded) - report.objective) > 1e-6 * max(1.0, abs(report.objective)):
        raise ValidationError("recorded objective does not match the assignment",
                              f"{recorded} vs {report.objective}")
    for v in report.violations:
        print(f"violation {v.name} [{v.tag}] by {v.amount:.6g}: {v.detail}")
    if not report.ok:
        raise ValidationError("solution violates its model", report.summary())
    print(report.summary())
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def cli(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit status"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ConfigError.exit_code if e.code else EXIT_OK
    setup_logging(args.verbose, args.quiet)
    try:
        config = _experiment(args)
        return COMMANDS[args.command](args, config)
    except PlannerError as e:
        print(f"error[{e.exit_code}]: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.debug("unexpected failure", exc_info=True)
        print(f"error[4]: {type(e).__name__}: {e}", file=sys.stderr)
        return 4
