# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Stationary benchmarks and calibration of CES weights, input coefficients and fixed costs."""

import logging
import numpy as np
from economy.errors import DomainError, InfeasibleCalibration, NonViable, ParseError, SchemaError
from economy.model import SKILLS, Economy, EquilibriumSolution, FloatArray, FrozenModel
from economy.utils import load_yaml_document
from economy.validation import validate
from equilibrium.dynamics import zero_profit_targets
from equilibrium.household import effective_consumer_prices
from equilibrium.markets import MarketState, saving_shares, to_solution
from equilibrium.public_sector import regional_budget
from equilibrium.solver import PeriodGuess, PeriodSystem, SolverOptions, solve_period, solve_system
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from typing import Optional


logger = logging.getLogger(__name__)

BALANCE_TOLERANCE = 1e-6
REPRODUCTION_TOLERANCE = 1e-8
MAX_EQUITY_ROUNDS = 50


class BaseYearFlows(FrozenModel):
    """Observed base-year prices and flows (totals by region unless noted per firm)."""

    prices: FloatArray = Field(description='p[s, r]')
    output: FloatArray = Field(description='X[s, r], per firm')
    total_demand: FloatArray = Field(description='Demand addressed to one firm of (s, r)')
    consumer_price: FloatArray = Field(description='P^c by region')
    household_spending: FloatArray = Field(
        description='Tax-inclusive household spending on sector s in region q, shape (S, R-1)'
    )
    household_expenditure: FloatArray = Field(description='Total household spending by region')
    intermediate_use: FloatArray = Field(description='X^u[s, u, r], per firm')
    factor_payments: FloatArray = Field(description='P^y (X + FC), per firm')
    value_added_price: FloatArray = Field(description='P^y[s, r]')
    durable_fixed_spending: FloatArray = Field(description='P^c FC_v, per durable firm')
    wages: FloatArray = Field(description='w[e, r]')
    design_price: FloatArray = Field(description='P_J[m]')


class CalibrationResult(BaseModel):
    """Calibrated economy, its benchmark solution and the calibration report."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    economy: Economy
    benchmark: EquilibriumSolution
    report: dict[str, float] = Field(default_factory=dict)


def observed_flows(solution: EquilibriumSolution, economy: Economy) -> BaseYearFlows:
    """Base-year flow table an observer of `solution` would record."""
    return BaseYearFlows(
        prices=solution.prices,
        output=solution.output,
        total_demand=(
            solution.demand_households
            + solution.demand_firms
            + solution.demand_capital
            + solution.demand_government
        ),
        consumer_price=solution.consumer_price,
        household_spending=solution.household_spending,
        household_expenditure=np.sum(solution.household_spending, axis=0),
        intermediate_use=solution.intermediate_use,
        factor_payments=solution.factor_payments,
        value_added_price=solution.value_added_price,
        durable_fixed_spending=solution.durable_fixed_spending,
        wages=solution.wages,
        design_price=solution.design_price,
    )


def load_flows(path: str) -> BaseYearFlows:
    """Read a base-year flow table from YAML; keys are the `BaseYearFlows` fields.

    Raises:
        ParseError: On unreadable YAML or an unknown key
        SchemaError: If a field is missing or malformed
    """
    document, lines = load_yaml_document(path)
    for key in document:
        if key not in BaseYearFlows.model_fields:
            raise ParseError(f"Unknown key '{key}'", line=lines.get(key), field=key)
    try:
        return BaseYearFlows(**document)
    except ValidationError as e:
        raise SchemaError([f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()])


def _relative_gap(left, right) -> float:
    left, right = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
    scale = np.maximum(np.maximum(np.abs(left), np.abs(right)), 1e-300)
    return float(np.max(np.abs(left - right) / scale)) if left.size else 0.0


def _check_balances(flows: BaseYearFlows, report: dict[str, float]) -> None:
    gap = _relative_gap(flows.output, flows.total_demand)
    report['goods_balance'] = gap
    if gap > BALANCE_TOLERANCE:
        s, r = np.unravel_index(
            np.argmax(np.abs(flows.output - flows.total_demand)), flows.output.shape
        )
        raise InfeasibleCalibration(f'goods market of sector {s} in region {r} does not clear')
    gap = _relative_gap(np.sum(flows.household_spending, axis=0), flows.household_expenditure)
    report['household_balance'] = gap
    if gap > BALANCE_TOLERANCE:
        raise InfeasibleCalibration('household spending by sector does not add up to expenditure')


def _sector_weights(economy: Economy, flows: BaseYearFlows, report: dict[str, float]):
    """beta_s recovered from household spending shares and the consumer price index.

    beta^(1/(1-theta)) = share P^c^(theta/(theta-1)) / sum_r N eff^(theta/(theta-1)), which
    must agree across regions.
    """
    topology, params, stocks = economy.topology, economy.parameters, economy.stocks
    Sd, Rd, S, R = (
        topology.domestic_sectors,
        topology.domestic_regions,
        topology.sector_count,
        topology.region_count,
    )
    theta = params.theta
    full_prices = np.zeros((S, R))
    full_prices[:Sd, :Rd] = flows.prices
    full_prices[Sd, Rd] = params.foreign_price
    full_firms = np.zeros((S, R))
    full_firms[:Sd, :Rd] = stocks.firms
    full_firms[Sd, Rd] = 1.0
    tax = params.consumption_tax[topology.country_of_region].T
    effective = effective_consumer_prices(full_prices, topology.trade_costs[:, :, :Rd], tax)
    present = full_firms[:, :, None] > 0
    terms = full_firms[:, :, None] * np.where(present, effective, 1.0) ** (theta / (theta - 1.0))
    reach = np.sum(np.where(present, terms, 0.0), axis=1)
    shares = flows.household_spending / flows.household_expenditure
    if np.any(shares <= 0):
        raise InfeasibleCalibration('every sector needs positive household spending')
    weights = (shares * flows.consumer_price ** (theta / (theta - 1.0)) / reach) ** (1.0 - theta)
    spread = _relative_gap(weights, np.broadcast_to(weights[:, :1], weights.shape))
    report['sector_weight_spread'] = spread
    if spread > BALANCE_TOLERANCE:
        s = int(np.argmax(np.ptp(weights, axis=1)))
        raise InfeasibleCalibration(f'sector weight of {topology.sector_names[s]} differs across regions')
    return weights[:, 0]


def _technical_coefficients(economy: Economy, flows: BaseYearFlows, report: dict[str, float]):
    topology = economy.topology
    coefficients = flows.intermediate_use / flows.output[:, None, :]
    national = np.empty((topology.country_count,) + coefficients.shape[:2])
    spread = 0.0
    for m in range(topology.country_count):
        regions = topology.regions_in_country(m)
        national[m] = coefficients[:, :, regions[0]]
        spread = max(
            spread,
            _relative_gap(
                coefficients[:, :, regions],
                np.broadcast_to(national[m][:, :, None], coefficients[:, :, regions].shape),
            ),
        )
    report['technical_coefficient_spread'] = spread
    if spread > BALANCE_TOLERANCE:
        raise InfeasibleCalibration('input coefficients differ across the regions of a country')
    return national


def _fixed_costs(flows: BaseYearFlows):
    fixed_cost = flows.factor_payments / flows.value_added_price - flows.output
    if np.any(fixed_cost <= 0):
        s, r = np.unravel_index(np.argmin(fixed_cost), fixed_cost.shape)
        raise InfeasibleCalibration(
            f'factor payments of sector {s} in region {r} leave no positive fixed cost'
        )
    durable_fixed_cost = flows.durable_fixed_spending / flows.consumer_price
    if np.any(durable_fixed_cost < 0):
        raise InfeasibleCalibration('durable fixed-cost spending must be non-negative')
    return fixed_cost, durable_fixed_cost


def calibrate(
    economy: Economy, flows: BaseYearFlows, options: Optional[SolverOptions] = None
) -> CalibrationResult:
    """Choose beta_s, a_s^u, FC and FC_v so that `flows` is an equilibrium of `economy`.

    Every other parameter, the fiscal inputs and the stocks are taken as given. The
    calibrated economy is re-solved from the observed point and must reproduce the
    observed prices and outputs.

    Raises:
        InfeasibleCalibration: With the first identity the data cannot satisfy
    """
    options = options or SolverOptions()
    report: dict[str, float] = {}
    _check_balances(flows, report)
    weights = _sector_weights(economy, flows, report)
    coefficients = _technical_coefficients(economy, flows, report)
    fixed_cost, durable_fixed_cost = _fixed_costs(flows)

    calibrated = economy.model_copy(
        update={
            'parameters': economy.parameters.replace(
                sector_weights=weights,
                technical_coefficients=coefficients,
                fixed_cost=fixed_cost,
                durable_fixed_cost=durable_fixed_cost,
            )
        }
    )
    checked = validate(calibrated)
    if not checked.passed:
        raise InfeasibleCalibration(checked.violations[0])

    guess = PeriodGuess(
        prices=flows.prices,
        output=flows.output,
        wages=flows.wages,
        design_price=flows.design_price,
    )
    benchmark = solve_period(calibrated, options, initial=guess)
    report['price_gap'] = _relative_gap(benchmark.prices, flows.prices)
    report['output_gap'] = _relative_gap(benchmark.output, flows.output)
    report['walras_residual'] = benchmark.walras_residual
    if report['price_gap'] > REPRODUCTION_TOLERANCE or report['output_gap'] > REPRODUCTION_TOLERANCE:
        raise InfeasibleCalibration('the calibrated benchmark does not reproduce the base year')
    logger.info(
        f'Calibrated {economy.name}: price gap {report["price_gap"]:.2e}, '
        f'output gap {report["output_gap"]:.2e}, Walras residual {benchmark.walras_residual:.2e}'
    )
    return CalibrationResult(economy=calibrated, benchmark=benchmark, report=report)


class SteadyStateSystem:
    """Period system extended with entry, design stocks, transfers and foreign income.

    Unknowns after the period block: log N[s, r], log A[r], log J[m], TR_H[m] and log
    foreign income. Conditions: X = X*, z = z*, J = Delta J, D_m = 0 and balanced trade.
    Durable capital equals durable output throughout.
    """

    def __init__(self, economy: Economy):
        topology = economy.topology
        self.economy = economy
        self.period_system = PeriodSystem(economy, steady=True)
        sectors, regions = topology.sector_names[:-1], topology.region_names[:-1]
        Sd, Rd, M = topology.domestic_sectors, topology.domestic_regions, topology.country_count
        self.labels = (
            self.period_system.labels
            + [f'entry {s}/{r}' for s in sectors for r in regions]
            + [f'durable entry {r}' for r in regions]
            + [f'design stock {m}' for m in topology.country_names]
            + [f'budget {m}' for m in topology.country_names]
            + ['trade balance']
        )
        # firm counts grow with positive profit; the remaining unknowns fall with their residual
        self.signs = np.concatenate(
            [self.period_system.signs, -np.ones(Sd * Rd + Rd), np.ones(2 * M + 1)]
        )

    def initial(self, guess: PeriodGuess) -> np.ndarray:
        stocks = self.economy.stocks
        return np.concatenate(
            [
                guess.to_vector(),
                np.log(stocks.firms.ravel()),
                np.log(stocks.durable_firms),
                np.log(stocks.designs),
                self.economy.fiscal.household_transfers,
                [np.log(self.economy.parameters.foreign_income)],
            ]
        )

    def economy_at(self, x) -> Economy:
        topology, economy = self.economy.topology, self.economy
        Sd, Rd, M = topology.domestic_sectors, topology.domestic_regions, topology.country_count
        start = self.period_system.size
        firms = np.exp(x[start : start + Sd * Rd]).reshape(Sd, Rd)
        start += Sd * Rd
        durable_firms = np.exp(x[start : start + Rd])
        start += Rd
        designs = np.exp(x[start : start + M])
        start += M
        transfers = np.array(x[start : start + M])
        foreign_income = float(np.exp(x[start + M]))
        return Economy(
            format_version=economy.format_version,
            name=economy.name,
            topology=topology,
            parameters=economy.parameters.model_copy(update={'foreign_income': foreign_income}),
            fiscal=economy.fiscal.replace(household_transfers=transfers),
            stocks=economy.stocks.replace(
                firms=firms, durable_firms=durable_firms, designs=designs
            ),
        )

    def state(self, x) -> tuple[Economy, MarketState]:
        economy = self.economy_at(x)
        period_system = PeriodSystem(economy, steady=True)
        return economy, period_system.state(x[: self.period_system.size])

    def residual(self, x) -> np.ndarray:
        economy, state = self.state(x)
        blocks = state.residual_blocks()
        try:
            output_target, durable_target = zero_profit_targets(state, economy)
        except NonViable as e:
            raise DomainError(str(e))
        gdp = economy.topology.country_membership() @ state.gdp
        exports, imports = np.sum(state.exports), np.sum(state.imports)
        if exports <= 0 or imports <= 0 or np.any(gdp <= 0):
            raise DomainError('Stationary trade balance needs positive trade flows and GDP')
        values = np.concatenate(
            [blocks[name].ravel() for name in blocks]
            + [
                (np.log(state.output) - np.log(output_target)).ravel(),
                np.log(state.durable_output) - np.log(durable_target),
                np.log(economy.stocks.designs) - np.log(state.new_designs),
                state.deficit / gdp,
                [np.log(exports) - np.log(imports)],
            ]
        )
        if not np.all(np.isfinite(values)):
            raise DomainError('Non-finite stationary residual')
        return values


def _stationary_inputs(economy: Economy) -> Economy:
    """Replacement education, replacement public capital and no foreign assets."""
    topology, params, fiscal = economy.topology, economy.parameters, economy.fiscal
    country = topology.country_of_region
    budget = regional_budget(
        fiscal.government_spending, topology.households, country, fiscal.eu_transfers
    )
    public_capital = fiscal.investment_share[country] * budget / params.capital_depreciation
    return economy.model_copy(
        update={
            'parameters': params.replace(
                education_time=np.full(
                    (len(SKILLS), topology.domestic_regions),
                    np.log1p(params.human_capital_depreciation),
                )
            ),
            'stocks': economy.stocks.replace(
                public_capital=public_capital,
                foreign_bonds=np.zeros(topology.domestic_regions),
                previous_consumer_prices=None,
                previous_wages=None,
            ),
        }
    )


def build_steady_state(economy: Economy, options: Optional[SolverOptions] = None) -> Economy:
    """Economy whose stocks reproduce themselves under an empty scenario.

    Firm counts, durable firms, design stocks, national transfers and foreign income are
    solved jointly with the period equilibrium; equity is then redistributed in
    proportion to savings until holdings are stationary. Fixed costs stay as given.

    Raises:
        InfeasibleCalibration: If a sector or region has no firms, or foreign demand
            for domestic varieties is zero
        NonConvergence: If the extended system cannot be solved
    """
    options = options or SolverOptions()
    stocks = economy.stocks
    if np.any(stocks.firms <= 0):
        raise InfeasibleCalibration('a stationary benchmark needs firms in every sector and region')
    if economy.parameters.foreign_income * economy.parameters.foreign_domestic_share <= 0:
        raise InfeasibleCalibration('balanced trade needs foreign spending on domestic varieties')

    current = _stationary_inputs(economy)
    try:
        guess = PeriodGuess.from_solution(solve_period(current, options, steady=True))
    except (ArithmeticError, RuntimeError, ValueError):
        guess = PeriodGuess.benchmark(current)
    system = SteadyStateSystem(current)
    x = system.initial(guess)

    for round_ in range(1, MAX_EQUITY_ROUNDS + 1):
        x, norm, iterations = solve_system(
            system.residual, x, system.signs, system.labels, options
        )
        current, state = system.state(x)
        equity = np.outer(
            saving_shares(state),
            current.stocks.durable_firms * state.consumer_price * state.durable_output,
        )
        change = float(np.max(np.abs(equity - current.stocks.equity)))
        current = current.with_stocks(current.stocks.replace(equity=equity))
        system = SteadyStateSystem(current)
        logger.debug(
            f'Steady-state round {round_}: residual {norm:.3e} after {iterations} iterations, '
            f'equity change {change:.3e}'
        )
        if change <= options.tol * max(1.0, float(np.max(np.abs(equity)))):
            break

    x, norm, _ = solve_system(system.residual, x, system.signs, system.labels, options)
    current, state = system.state(x)
    solution = to_solution(state, residual_norm=norm)
    logger.info(
        f'Stationary benchmark of {economy.name}: GDP {solution.total_gdp:.6g}, '
        f'Walras residual {solution.walras_residual:.2e}'
    )
    return current.with_stocks(
        current.stocks.replace(
            capital=np.array(solution.durable_output),
            previous_consumer_prices=np.array(solution.consumer_price),
            previous_wages=np.array(solution.wages),
        )
    )
