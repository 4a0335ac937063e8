# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Firm entry, laws of motion of the stocks and the multi-period driver."""

import logging
import numpy as np
from .household import human_capital_step
from .markets import saving_shares
from .public_sector import apply_policy, public_capital_step
from .solver import PeriodGuess, SolverOptions, solve_period
from economy.config import validate_scenario
from economy.errors import NonConvergence, NonViable, SingularJacobian
from economy.model import Economy, EquilibriumSolution, PolicyScenario, StockState
from pydantic import BaseModel, ConfigDict, Field
from typing import Optional


logger = logging.getLogger(__name__)


class Trajectory(BaseModel):
    """Stocks of periods 0..T and the solutions of periods 1..T.

    `states[t]` are the stocks a period starts from; `solutions[t - 1]` is the
    equilibrium of period t, and `states[t]` follows from `states[t - 1]` and it by
    the laws of motion.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    economy: Economy = Field(description='Baseline economy the run started from')
    scenario: PolicyScenario = Field(default_factory=PolicyScenario)
    states: list[StockState] = Field(default_factory=list)
    solutions: list[EquilibriumSolution] = Field(default_factory=list)
    events: list[str] = Field(default_factory=list)

    @property
    def periods(self) -> int:
        return len(self.solutions)

    def pairs(self):
        """(stocks at the start of period t, solution of period t) for t = 1..T."""
        return list(zip(self.states[:-1], self.solutions))


def _subsidies_per_firm(economy: Economy):
    fiscal, stocks = economy.fiscal, economy.stocks
    operating = stocks.firms > 0
    envelope = np.where(operating, fiscal.final_goods_subsidy + fiscal.eu_final_goods_subsidy, 0.0)
    final_goods = np.where(operating, envelope / np.where(operating, stocks.firms, 1.0), 0.0)
    durable = (fiscal.durable_subsidy + fiscal.eu_durable_subsidy) / stocks.durable_firms
    return final_goods, durable


def zero_profit_targets(solution: EquilibriumSolution, economy: Economy):
    """Per-firm output levels X*[s, r] and z*[r] at which pure profit vanishes.

    X* = (P^y FC - Sub) / ((1-theta)/theta MC) and
    z* = (P_J + P^c FC_v - Sub_v) / ((1-rho)/rho r^k P^c). Sectors without firms keep
    their solved output as target.

    Raises:
        NonViable: If a margin or a target is not strictly positive; durable-goods
            firms are reported with sector -1
    """
    params = economy.parameters
    theta, rho = params.theta, params.rho
    subsidy, durable_subsidy = _subsidies_per_firm(economy)
    operating = economy.stocks.firms > 0

    margin = (1.0 - theta) / theta * solution.marginal_cost
    numerator = solution.value_added_price * params.fixed_cost - subsidy
    for s, r in zip(*np.nonzero(operating & ((margin <= 0) | (numerator <= 0)))):
        raise NonViable(int(s), int(r))
    output_target = np.where(operating, numerator / np.where(operating, margin, 1.0), solution.output)

    design_cost = solution.design_price[economy.topology.country_of_region]
    durable_margin = (1.0 - rho) / rho * solution.rental_rate * solution.consumer_price
    durable_numerator = (
        design_cost + solution.consumer_price * params.durable_fixed_cost - durable_subsidy
    )
    for r in np.flatnonzero((durable_margin <= 0) | (durable_numerator <= 0)):
        raise NonViable(
            -1, int(r), f'Durable-goods firms of region {int(r)} have no positive zero-profit output'
        )
    return output_target, durable_numerator / durable_margin


def firm_entry_step(firms, target, speed: float):
    """N' = max(N + lambda (N* - N), 0)."""
    firms = np.asarray(firms, dtype=float)
    return np.maximum(firms + speed * (np.asarray(target) - firms), 0.0)


def firm_targets(solution: EquilibriumSolution, economy: Economy):
    """Long-run counts N* = N X / X* and A* = A z / z* under market crowding."""
    output_target, durable_target = zero_profit_targets(solution, economy)
    stocks = economy.stocks
    return (
        stocks.firms * solution.output / output_target,
        stocks.durable_firms * solution.durable_output / durable_target,
    )


def _guard(name: str, values, period: Optional[int], events: list[str]):
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        message = f'Period {period}: clipped negative {name} to zero'
        logger.warning(message)
        events.append(message)
        return np.maximum(values, 0.0)
    return values


def advance_stocks(economy: Economy, solution: EquilibriumSolution, period: Optional[int] = None):
    """Stocks of the next period from the solved period.

    Every law reads the same solution: capital, public capital, human capital, designs
    (fully depreciated each period), firm counts, then asset positions and public debt.
    Physical stocks, firm counts and equity are clipped at zero with an event; bond
    positions are signed and left alone.

    Returns:
        (next StockState, list of events)
    """
    params, stocks = economy.parameters, economy.stocks
    households = economy.topology.households
    events: list[str] = []

    capital = _guard('capital', solution.durable_output, period, events)
    public_capital = _guard(
        'public capital',
        public_capital_step(
            stocks.public_capital, solution.public_investment, params.capital_depreciation
        ),
        period,
        events,
    )
    human_capital = _guard(
        'human capital',
        human_capital_step(
            stocks.human_capital, params.education_time, params.human_capital_depreciation
        ),
        period,
        events,
    )
    designs = _guard('designs', solution.new_designs, period, events)

    firm_target, durable_target = firm_targets(solution, economy)
    firms = firm_entry_step(stocks.firms, firm_target, params.entry_speed)
    durable_firms = firm_entry_step(stocks.durable_firms, durable_target, params.entry_speed)

    shares = saving_shares(solution)
    new_equity = economy.stocks.durable_firms * solution.consumer_price * solution.investment
    equity = _guard(
        'equity',
        stocks.equity
        + np.outer(shares, new_equity)
        - params.capital_depreciation * stocks.equity,
        period,
        events,
    )
    government_bonds = stocks.government_bonds + np.outer(shares, solution.deficit)
    foreign_bonds = stocks.foreign_bonds + shares * solution.current_account
    public_debt = stocks.public_debt + solution.deficit
    logger.debug(
        f'Period {period}: advanced stocks, firms {firms.ravel().tolist()}, '
        f'durable firms {durable_firms.tolist()}'
    )

    return (
        stocks.replace(
            capital=capital,
            public_capital=public_capital,
            human_capital=human_capital,
            firms=firms,
            durable_firms=durable_firms,
            designs=designs,
            equity=equity,
            government_bonds=government_bonds,
            foreign_bonds=foreign_bonds,
            public_debt=public_debt,
            previous_consumer_prices=np.array(solution.consumer_price),
            previous_wages=np.array(solution.wages),
        ),
        events,
    )


def simulate(
    economy: Economy,
    scenario: Optional[PolicyScenario] = None,
    periods: Optional[int] = None,
    options: Optional[SolverOptions] = None,
    trace: Optional[list] = None,
) -> Trajectory:
    """Run `periods` periods: apply the policy of the period, solve, advance the stocks.

    Each period warm-starts from the previous solution.

    Raises:
        ScenarioError: If the scenario does not fit the economy
        NonConvergence: With `period` set and a partial `trajectory` attached
        SingularJacobian: With a partial `trajectory` attached
    """
    scenario = scenario or PolicyScenario()
    periods = periods if periods is not None else scenario.horizon
    if periods < 1:
        raise ValueError(f'Number of periods must be at least 1, got {periods}')
    validate_scenario(scenario, economy)

    states, solutions, events = [economy.stocks], [], []
    guess = None
    for period in range(1, periods + 1):
        current = apply_policy(scenario, period, economy.with_stocks(states[-1]))
        try:
            solution = solve_period(current, options, guess, period=period, trace=trace)
        except (NonConvergence, SingularJacobian) as e:
            logger.error(f'Simulation stopped in period {period}: {e}')
            e.trajectory = Trajectory(
                economy=economy, scenario=scenario, states=states, solutions=solutions, events=events
            )
            raise
        next_stocks, period_events = advance_stocks(current, solution, period)
        solutions.append(solution)
        states.append(next_stocks)
        events.extend(period_events)
        guess = PeriodGuess.from_solution(solution)
        logger.info(
            f'Period {period}/{periods} solved in {solution.iterations} iterations, '
            f'GDP {solution.total_gdp:.6g}'
        )

    return Trajectory(
        economy=economy, scenario=scenario, states=states, solutions=solutions, events=events
    )
