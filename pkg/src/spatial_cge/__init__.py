# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import argparse
import json
import logging
import numpy as np
import os
from .calibration import build_steady_state, calibrate, load_flows, observed_flows
from .export import export_results
from economy.config import dump_economy, load_economy, load_scenario
from economy.errors import (
    InfeasibleCalibration,
    NonConvergence,
    NonViable,
    ParseError,
    ScenarioError,
    SchemaError,
    SingularJacobian,
)
from equilibrium.dynamics import simulate
from equilibrium.markets import (
    arbitrage_residuals,
    design_market_residual,
    financial_closure_residual,
    labour_market_residual,
)
from equilibrium.solver import SolverOptions, solve_period
from typing import Optional


EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NON_CONVERGENCE = 3
EXIT_IO = 4

logger = logging.getLogger(__name__)


def _options(args: argparse.Namespace) -> SolverOptions:
    overrides = {
        'tol': args.tol,
        'max_iter': args.max_iter,
        'damping': args.damping,
    }
    return SolverOptions(**{key: value for key, value in overrides.items() if value is not None})


def _write_trace(trace: list, out: str) -> None:
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, 'solver_trace.jsonl'), 'w', encoding='utf-8') as f:
        for record in trace:
            f.write(json.dumps(record) + '\n')


def cmd_validate(args: argparse.Namespace) -> int:
    economy = load_economy(args.economy)
    print(f"Economy '{economy.name}' is valid")
    if args.scenario:
        scenario = load_scenario(args.scenario, economy)
        print(f"Scenario '{scenario.name}' is valid ({len(scenario.instruments)} instruments)")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    economy = load_economy(args.economy)
    options = _options(args)
    if args.flows:
        result = calibrate(economy, load_flows(args.flows), options)
    else:
        benchmark_economy = build_steady_state(economy, options)
        flows = observed_flows(solve_period(benchmark_economy, options), benchmark_economy)
        result = calibrate(benchmark_economy, flows, options)
    os.makedirs(args.out, exist_ok=True)
    dump_economy(result.economy, os.path.join(args.out, 'calibrated_economy.yml'))
    with open(os.path.join(args.out, 'calibration_report.json'), 'w', encoding='utf-8') as f:
        json.dump(result.report, f, indent=2, sort_keys=True)
        f.write('\n')
    print(f'Calibrated economy written to {args.out}')
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    economy = load_economy(args.economy)
    scenario = load_scenario(args.scenario, economy) if args.scenario else None
    trace = [] if args.verbose else None
    try:
        trajectory = simulate(economy, scenario, args.periods, _options(args), trace=trace)
    finally:
        if trace:
            _write_trace(trace, args.out)
    for path in export_results(trajectory, args.out, args.format):
        print(path)
    for event in trajectory.events:
        print(f'event: {event}')
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    economy = load_economy(args.economy)
    solution = solve_period(economy, _options(args))
    diagnostics = {
        'iterations': solution.iterations,
        'residual_norm': solution.residual_norm,
        'walras_residual': solution.walras_residual,
        'financial_closure_residual': financial_closure_residual(solution, economy),
        'labour_market_residual': float(np.max(np.abs(labour_market_residual(solution, economy)))),
        'design_market_residual': float(np.max(np.abs(design_market_residual(solution, economy)))),
        'arbitrage_residual': float(
            np.max(
                np.abs(
                    arbitrage_residuals(solution, economy, economy.stocks.previous_consumer_prices)
                )
            )
        ),
        'total_gdp': solution.total_gdp,
    }
    for key, value in diagnostics.items():
        print(f'{key}: {value}')
    return EXIT_OK


COMMANDS = {
    'validate': cmd_validate,
    'calibrate': cmd_calibrate,
    'run': cmd_run,
    'check': cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--economy', required=True, help='Path to the economy YAML document')
    common.add_argument('--tol', type=float, default=None, help='Solver tolerance')
    common.add_argument('--max-iter', type=int, default=None, help='Newton iteration limit')
    common.add_argument('--damping', type=float, default=None, help='Initial Newton step length')
    common.add_argument('--verbose', action='store_true', help='Log at DEBUG level')

    parser = argparse.ArgumentParser(
        prog='spatial-cge', description='Spatial general-equilibrium simulation engine'
    )
    commands = parser.add_subparsers(dest='command', required=True)
    validate = commands.add_parser('validate', parents=[common], help='Validate input documents')
    validate.add_argument('--scenario', default=None, help='Path to a policy scenario')

    calibrate_parser = commands.add_parser(
        'calibrate', parents=[common], help='Calibrate the economy to a benchmark'
    )
    calibrate_parser.add_argument(
        '--flows', default=None, help='Base-year flow table; defaults to the stationary benchmark'
    )
    calibrate_parser.add_argument('--out', default='out', help='Output directory')

    run = commands.add_parser('run', parents=[common], help='Simulate a policy scenario')
    run.add_argument('--scenario', default=None, help='Path to a policy scenario')
    run.add_argument('--periods', type=int, default=None, help='Number of periods')
    run.add_argument('--out', default='out', help='Output directory')
    run.add_argument('--format', choices=['csv', 'json'], default='csv', help='Result format')

    commands.add_parser('check', parents=[common], help='Solve one period and print diagnostics')
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point of the `spatial-cge` command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    try:
        return COMMANDS[args.command](args)
    except (ParseError, SchemaError, ScenarioError, InfeasibleCalibration) as e:
        logger.error(f'Validation failed: {e}')
        return EXIT_INVALID
    except (NonConvergence, SingularJacobian, NonViable) as e:
        logger.error(f'Solver failed: {e}')
        return EXIT_NON_CONVERGENCE
    except OSError as e:
        logger.error(f'I/O error: {e}')
        return EXIT_IO
