# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Evaluation of one candidate period state: demands, accounts and market residuals."""

import numpy as np
from .household import (
    ces_price_index,
    ces_variety_demand,
    consumer_price_index,
    effective_consumer_prices,
    household_accounts,
    hours_supplied,
    wage_adjustment_cost,
    wage_inflation,
)
from .household import capital_income as household_capital_income
from .household import disposable_income as household_disposable_income
from .production import (
    durable_cash_flow,
    durable_price_index,
    durable_pricing_profit,
    effective_human_capital,
    factor_demands,
    final_goods_profit,
    innovation_probability,
    intermediate_price_index,
    investment_step,
    labour_index,
    marginal_cost_and_price,
    rd_balance,
    regional_coefficients,
    value_added_price,
)
from .public_sector import deficit, eu_budget, eu_contribution, regional_budget, tax_revenue
from economy.errors import DomainError
from economy.model import HIGH_SKILL, Economy, EquilibriumSolution, ModelParameters
from pydantic import BaseModel, ConfigDict
from typing import Optional


RESIDUAL_BLOCKS = ('pricing', 'goods', 'labour', 'design')


class MarketState(BaseModel):
    """Every price, quantity and account implied by one candidate of the period unknowns."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    prices: np.ndarray
    output: np.ndarray
    wages: np.ndarray
    design_price: np.ndarray
    capital: np.ndarray
    consumer_price: np.ndarray
    intermediate_price: np.ndarray
    rental_rate: np.ndarray
    bond_rate: np.ndarray
    durable_prices: np.ndarray
    durable_price_index: np.ndarray
    wage_index: np.ndarray
    value_added_price: np.ndarray
    marginal_cost: np.ndarray
    markup_price: np.ndarray
    intermediate_use: np.ndarray
    factor_payments: np.ndarray
    labour: np.ndarray
    labour_final_goods: np.ndarray
    rd_labour_demand: np.ndarray
    rd_wage_index: np.ndarray
    rd_labour: np.ndarray
    new_designs: np.ndarray
    design_demand: np.ndarray
    durable_output: np.ndarray
    innovation_probability: np.ndarray
    floor_binding: list[int]
    investment: np.ndarray
    profits: np.ndarray
    durable_profit: np.ndarray
    durable_cash: np.ndarray
    distributed_profit: np.ndarray
    capital_income: np.ndarray
    wage_inflation: np.ndarray
    adjustment_cost: np.ndarray
    disposable_income: np.ndarray
    consumption: np.ndarray
    savings: np.ndarray
    regional_budget: np.ndarray
    public_investment: np.ndarray
    demand_households: np.ndarray
    demand_firms: np.ndarray
    demand_capital: np.ndarray
    demand_government: np.ndarray
    household_spending: np.ndarray
    durable_fixed_spending: np.ndarray
    exports: np.ndarray
    imports: np.ndarray
    trade_balance: np.ndarray
    current_account: float
    tax_revenue: np.ndarray
    subsidies: np.ndarray
    eu_budget: float
    eu_contribution: np.ndarray
    deficit: np.ndarray
    gdp: np.ndarray
    total_savings: float
    capital_spending: float
    labour_supply: np.ndarray
    real_wage: np.ndarray

    @property
    def total_demand(self) -> np.ndarray:
        return self.demand_households + self.demand_firms + self.demand_capital + self.demand_government

    @property
    def walras_residual(self) -> float:
        return self.total_savings - (
            self.capital_spending + float(np.sum(self.deficit)) + self.current_account
        )

    def residual_blocks(self) -> dict[str, np.ndarray]:
        """Residuals of the square period system, one block per market.

        Pricing, goods and design blocks are log gaps; the labour block is hours demanded
        minus hours supplied.
        """
        total = self.total_demand
        if np.any(total <= 0) or np.any(self.design_demand <= 0):
            raise DomainError('Demand must be strictly positive at a candidate state')
        return {
            'pricing': np.log(self.prices) - np.log(self.markup_price),
            'goods': np.log(self.output) - np.log(total),
            'labour': self.labour - self.labour_supply,
            'design': np.log(self.new_designs) - np.log(self.design_demand),
        }


def arbitrage_rates(consumer_price, previous_consumer_prices, params: ModelParameters, countries: int):
    """Closed-form arbitrage: r^k = delta_K + (r_F - (1 - delta_K) dP^c) / P^c and r^G = r_F.

    Raises:
        DomainError: If a rental rate is not strictly positive
    """
    consumer_price = np.asarray(consumer_price, dtype=float)
    change = 0.0 if previous_consumer_prices is None else consumer_price - previous_consumer_prices
    delta = params.capital_depreciation
    rental_rate = delta + (params.foreign_return - (1.0 - delta) * change) / consumer_price
    if np.any(rental_rate <= 0):
        raise DomainError('Arbitrage implies a non-positive rental rate')
    return rental_rate, np.full(countries, params.foreign_return)


def _masked_unit_demand(effective, present, price_index, weights, theta: float):
    unit = ces_variety_demand(np.where(present, effective, 1.0), price_index, weights, theta, 1.0)
    return np.where(present, unit, 0.0)


def evaluate(
    economy: Economy,
    prices,
    output,
    wages,
    design_price,
    capital: Optional[np.ndarray] = None,
    steady: bool = False,
) -> MarketState:
    """Evaluate every agent's behaviour and account at a candidate (p, X, w, P_J).

    `capital` overrides the predetermined durable capital; with `steady` the capital
    equals the durable output, so investment only replaces depreciation.

    Raises:
        DomainError: If a candidate leaves the domain of a behavioural relation
    """
    topology, params, fiscal, stocks = (
        economy.topology,
        economy.parameters,
        economy.fiscal,
        economy.stocks,
    )
    Rd, Sd, S, R, M = (
        topology.domestic_regions,
        topology.domestic_sectors,
        topology.sector_count,
        topology.region_count,
        topology.country_count,
    )
    prices = np.asarray(prices, dtype=float)
    output = np.asarray(output, dtype=float)
    wages = np.asarray(wages, dtype=float)
    design_price = np.asarray(design_price, dtype=float)
    for name, values in (
        ('prices', prices),
        ('output', output),
        ('wages', wages),
        ('design_price', design_price),
    ):
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DomainError(f'Candidate {name} must be finite and strictly positive')

    households = topology.households
    country = topology.country_of_region
    membership = topology.country_membership()
    population = topology.country_population()
    theta, rho, sigma = params.theta, params.rho, params.sigma
    tau = topology.trade_costs
    tau_home = tau[:, :, :Rd]
    beta = params.sector_weights
    firms = stocks.firms
    durable_firms = stocks.durable_firms

    full_prices = np.zeros((S, R))
    full_prices[:Sd, :Rd] = prices
    full_prices[Sd, Rd] = params.foreign_price
    full_firms = np.zeros((S, R))
    full_firms[:Sd, :Rd] = firms
    full_firms[Sd, Rd] = 1.0
    tax = params.consumption_tax[country].T

    consumer_price = consumer_price_index(full_prices, full_firms, tau_home, tax, beta, theta)
    intermediate_price = intermediate_price_index(full_prices, full_firms, tau_home, theta)
    rental_rate, bond_rate = arbitrage_rates(
        consumer_price, stocks.previous_consumer_prices, params, M
    )
    durable_prices = rental_rate * consumer_price / rho
    durable_index = durable_price_index(durable_prices, durable_firms, rho)
    effective_hc = effective_human_capital(stocks.human_capital, params.skill_productivity, sigma)
    labour_price = labour_index(wages, effective_hc, households, sigma)
    va_price = value_added_price(
        durable_index,
        labour_price,
        stocks.public_capital,
        params.capital_share,
        params.public_capital_elasticity,
    )
    coefficients = regional_coefficients(params.technical_coefficients, country)
    marginal_cost, markup_price = marginal_cost_and_price(
        va_price, intermediate_price, coefficients, theta
    )
    demands = factor_demands(
        output,
        params.fixed_cost,
        coefficients,
        va_price,
        full_prices,
        full_firms,
        tau_home,
        intermediate_price,
        durable_prices,
        durable_index,
        wages,
        effective_hc,
        labour_price,
        params.capital_share,
        theta,
        rho,
        sigma,
    )

    rnd = rd_balance(
        stocks.designs,
        design_price,
        fiscal.rd_subsidy + fiscal.eu_rd_subsidy,
        wages[HIGH_SKILL],
        effective_hc[HIGH_SKILL],
        households,
        membership,
        params.union_spillover,
        params.national_spillover,
        params.rd_supply_elasticity,
        sigma,
    )
    labour_final_goods = np.einsum('esr,sr->er', demands.labour_varieties, firms)
    labour = labour_final_goods.copy()
    labour[HIGH_SKILL] += rnd.labour_demand

    durable_output = np.sum(firms * demands.durable_varieties, axis=0)
    probability, floor_binding = innovation_probability(
        durable_firms,
        stocks.human_capital[HIGH_SKILL],
        labour[HIGH_SKILL],
        households,
        membership,
        params.innovation_weight,
        params.probability_floor,
    )
    design_demand = membership @ (durable_firms / probability)
    if steady:
        capital = durable_output
    elif capital is None:
        capital = stocks.capital
    investment, _ = investment_step(
        capital, durable_output, params.capital_depreciation, consumer_price
    )

    # subsidy envelopes are paid only where firms operate
    operating = firms > 0
    final_national = np.where(operating, fiscal.final_goods_subsidy, 0.0)
    final_eu = np.where(operating, fiscal.eu_final_goods_subsidy, 0.0)
    subsidy_per_firm = np.where(
        operating, (final_national + final_eu) / np.where(operating, firms, 1.0), 0.0
    )
    durable_subsidy_per_firm = (fiscal.durable_subsidy + fiscal.eu_durable_subsidy) / durable_firms

    design_cost = design_price[country]
    _, durable_profit = durable_pricing_profit(
        rental_rate,
        consumer_price,
        design_cost,
        params.durable_fixed_cost,
        durable_subsidy_per_firm,
        durable_output,
        probability,
        rho,
    )
    durable_cash = durable_cash_flow(
        durable_prices,
        durable_output,
        design_cost,
        probability,
        consumer_price,
        params.durable_fixed_cost,
        durable_subsidy_per_firm,
    )
    issued = households @ stocks.equity
    distributed = durable_cash - rental_rate * issued / durable_firms
    profits = final_goods_profit(
        prices, output, va_price, params.fixed_cost, marginal_cost, subsidy_per_firm
    )

    capital_income = household_capital_income(
        stocks.equity,
        stocks.government_bonds,
        stocks.foreign_bonds,
        rental_rate,
        bond_rate,
        params.foreign_return,
        distributed,
        durable_firms,
        float(np.sum(firms * profits)),
        households,
    )
    inflation = wage_inflation(wages, stocks.previous_wages)
    adjustment = wage_adjustment_cost(wages, labour, params.wage_adjustment_cost, inflation)
    wage_tax = params.wage_tax[country]
    income = household_disposable_income(
        wages,
        labour,
        wage_tax,
        params.capital_income_tax[country],
        capital_income,
        fiscal.household_transfers[country] / population[country],
        adjustment,
    )
    accounts = household_accounts(
        income, capital_income, adjustment, consumer_price, params.saving_rate, params.education_time
    )

    budget = regional_budget(fiscal.government_spending, households, country, fiscal.eu_transfers)
    public_investment = fiscal.investment_share[country] * budget

    # final demand: households, governments and durable firms buy the same bundle
    effective = effective_consumer_prices(full_prices, tau_home, tax)
    present = full_firms[:, :, None] > 0
    unit = _masked_unit_demand(effective, present, consumer_price, beta[:, None, None], theta)
    household_volume = households * (accounts.consumption + adjustment / consumer_price)
    capital_volume = durable_firms * (investment + params.durable_fixed_cost)
    delivered_households = unit * household_volume
    delivered_government = unit * budget
    delivered_capital = unit * capital_volume
    delivered_intermediate = np.einsum('uqsr,sr->uqr', demands.intermediate_varieties, firms)

    foreign_spending = params.foreign_income * params.foreign_domestic_share
    export_cost = tau[:Sd, :Rd, Rd]
    foreign_delivered = np.zeros((Sd, Rd))
    if foreign_spending > 0:
        export_prices = export_cost * prices
        export_weights = beta[:Sd, None]
        foreign_index = ces_price_index(export_prices, firms, export_weights, theta)
        foreign_delivered = np.where(
            operating,
            ces_variety_demand(
                export_prices, foreign_index, export_weights, theta, foreign_spending / foreign_index
            ),
            0.0,
        )

    def shipped(delivered):
        return np.sum(tau_home * delivered, axis=2)[:Sd, :Rd]

    foreign_shipped = export_cost * foreign_delivered
    demand_households = shipped(delivered_households) + foreign_shipped
    demand_government = shipped(delivered_government)
    demand_capital = shipped(delivered_capital)
    demand_firms = shipped(delivered_intermediate)

    final_delivered = delivered_households + delivered_government + delivered_capital
    foreign_route = tau_home[Sd, Rd, :]
    imports_by_region = params.foreign_price * foreign_route * (
        final_delivered[Sd, Rd, :] + delivered_intermediate[Sd, Rd, :]
    )
    exports_by_region = np.sum(firms * prices * foreign_shipped, axis=0)
    imports = membership @ imports_by_region
    exports = membership @ exports_by_region
    trade_balance = exports - imports
    current_account = float(
        np.sum(trade_balance)
        + params.foreign_return * np.sum(households * stocks.foreign_bonds)
    )

    purchases = np.sum(
        full_firms[:, :, None] * tau_home * full_prices[:, :, None] * final_delivered, axis=1
    )
    household_spending = np.sum(
        full_firms[:, :, None] * effective * delivered_households, axis=1
    )
    wage_bill = households * np.sum(wages * labour, axis=0)
    revenue = tax_revenue(
        purchases,
        wage_bill,
        households * capital_income,
        params.consumption_tax,
        params.wage_tax,
        params.capital_income_tax,
        country,
    )
    national_subsidy = (
        membership @ (np.sum(final_national, axis=0) + fiscal.durable_subsidy)
        + fiscal.rd_subsidy * rnd.new_designs
    )
    cpf = eu_budget(
        consumer_price,
        fiscal.eu_transfers,
        final_eu,
        fiscal.eu_durable_subsidy,
        fiscal.eu_rd_subsidy,
        rnd.new_designs,
    )
    gdp = np.sum(firms * va_price * output, axis=0)
    contribution = eu_contribution(membership @ gdp, cpf)
    deficits = deficit(
        consumer_price * budget,
        fiscal.household_transfers,
        contribution,
        bond_rate,
        stocks.public_debt,
        national_subsidy,
        revenue,
        consumer_price * fiscal.eu_transfers,
        membership,
    )

    real_wage = (1.0 - wage_tax) * wages / consumer_price
    supply = hours_supplied(
        real_wage,
        params.leisure_weight,
        params.labour_supply_elasticity,
        sigma,
        params.saving_rate,
        params.wage_adjustment_cost,
        inflation,
        wage_tax,
    )
    return MarketState(
        prices=prices,
        output=output,
        wages=wages,
        design_price=design_price,
        capital=capital,
        consumer_price=consumer_price,
        intermediate_price=intermediate_price,
        rental_rate=rental_rate,
        bond_rate=bond_rate,
        durable_prices=durable_prices,
        durable_price_index=durable_index,
        wage_index=labour_price,
        value_added_price=va_price,
        marginal_cost=marginal_cost,
        markup_price=markup_price,
        intermediate_use=demands.intermediate,
        factor_payments=va_price * (output + params.fixed_cost),
        labour=labour,
        labour_final_goods=labour_final_goods,
        rd_labour_demand=rnd.labour_demand,
        rd_wage_index=rnd.wage_index,
        rd_labour=rnd.labour,
        new_designs=rnd.new_designs,
        design_demand=design_demand,
        durable_output=durable_output,
        innovation_probability=probability,
        floor_binding=floor_binding,
        investment=investment,
        profits=profits,
        durable_profit=durable_profit,
        durable_cash=durable_cash,
        distributed_profit=distributed,
        capital_income=capital_income,
        wage_inflation=inflation,
        adjustment_cost=adjustment,
        disposable_income=accounts.disposable_income,
        consumption=accounts.consumption,
        savings=accounts.savings,
        regional_budget=budget,
        public_investment=public_investment,
        demand_households=demand_households,
        demand_firms=demand_firms,
        demand_capital=demand_capital,
        demand_government=demand_government,
        household_spending=household_spending,
        durable_fixed_spending=consumer_price * params.durable_fixed_cost,
        exports=exports,
        imports=imports,
        trade_balance=trade_balance,
        current_account=current_account,
        tax_revenue=revenue,
        subsidies=national_subsidy,
        eu_budget=cpf,
        eu_contribution=contribution,
        deficit=deficits,
        gdp=gdp,
        total_savings=float(np.sum(households * accounts.savings)),
        capital_spending=float(np.sum(durable_firms * consumer_price * investment)),
        labour_supply=supply,
        real_wage=real_wage,
    )


def to_solution(state: MarketState, residual_norm: float = 0.0, iterations: int = 0) -> EquilibriumSolution:
    """Freeze a solved state into an `EquilibriumSolution`."""
    return EquilibriumSolution(
        prices=state.prices,
        durable_prices=state.durable_prices,
        wages=state.wages,
        consumer_price=state.consumer_price,
        intermediate_price=state.intermediate_price,
        durable_price_index=state.durable_price_index,
        wage_index=state.wage_index,
        rd_wage_index=state.rd_wage_index,
        value_added_price=state.value_added_price,
        marginal_cost=state.marginal_cost,
        design_price=state.design_price,
        rental_rate=state.rental_rate,
        bond_rate=state.bond_rate,
        output=state.output,
        durable_output=state.durable_output,
        labour=state.labour,
        new_designs=state.new_designs,
        rd_labour=state.rd_labour,
        consumption=state.consumption,
        disposable_income=state.disposable_income,
        capital_income=state.capital_income,
        savings=state.savings,
        investment=state.investment,
        innovation_probability=state.innovation_probability,
        profits=state.profits,
        durable_profit=state.durable_profit,
        demand_households=state.demand_households,
        demand_firms=state.demand_firms,
        demand_capital=state.demand_capital,
        demand_government=state.demand_government,
        intermediate_use=state.intermediate_use,
        factor_payments=state.factor_payments,
        household_spending=state.household_spending,
        durable_fixed_spending=state.durable_fixed_spending,
        regional_budget=state.regional_budget,
        public_investment=state.public_investment,
        tax_revenue=state.tax_revenue,
        deficit=state.deficit,
        subsidies=state.subsidies,
        eu_contribution=state.eu_contribution,
        eu_budget=state.eu_budget,
        exports=state.exports,
        imports=state.imports,
        trade_balance=state.trade_balance,
        current_account=state.current_account,
        total_savings=state.total_savings,
        wage_inflation=state.wage_inflation,
        gdp=state.gdp,
        walras_residual=state.walras_residual,
        residual_norm=residual_norm,
        iterations=iterations,
        floor_binding=state.floor_binding,
    )


def total_demand(solution: EquilibriumSolution, sector: int, region: int) -> tuple[float, ...]:
    """(D_H, D_F, D_K, D_G, total) addressed to one firm of (sector, region)."""
    parts = (
        float(solution.demand_households[sector, region]),
        float(solution.demand_firms[sector, region]),
        float(solution.demand_capital[sector, region]),
        float(solution.demand_government[sector, region]),
    )
    return parts + (sum(parts),)


def labour_supply(solution: EquilibriumSolution, economy: Economy) -> np.ndarray:
    """Hours l[e, q] the households offer at the solved wages, from the wage rule."""
    params = economy.parameters
    country = economy.topology.country_of_region
    wage_tax = params.wage_tax[country]
    return hours_supplied(
        (1.0 - wage_tax) * solution.wages / solution.consumer_price,
        params.leisure_weight,
        params.labour_supply_elasticity,
        params.sigma,
        params.saving_rate,
        params.wage_adjustment_cost,
        solution.wage_inflation,
        wage_tax,
    )


def labour_market_residual(solution: EquilibriumSolution, economy: Economy) -> np.ndarray:
    """Household labour supply minus the hours firms and R&D sectors hire, by skill and region."""
    return labour_supply(solution, economy) - solution.labour


def design_market_residual(solution: EquilibriumSolution, economy: Economy) -> np.ndarray:
    """Delta J_m - sum over the regions of m of A_r / phi_r."""
    membership = economy.topology.country_membership()
    return solution.new_designs - membership @ (
        economy.stocks.durable_firms / solution.innovation_probability
    )


def trade_balance(solution: EquilibriumSolution):
    """(X_m, M_m, TB_m, TB)."""
    return (
        solution.exports,
        solution.imports,
        solution.trade_balance,
        float(np.sum(solution.trade_balance)),
    )


def financial_closure_residual(solution: EquilibriumSolution, economy: Economy) -> float:
    """S - (sum A P^c I + sum D + CA)."""
    investment = np.sum(economy.stocks.durable_firms * solution.consumer_price * solution.investment)
    return float(
        solution.total_savings
        - (investment + np.sum(solution.deficit) + solution.current_account)
    )


def saving_shares(solution: EquilibriumSolution) -> np.ndarray:
    """S_h / S, the share of every region's household in new assets."""
    if solution.total_savings == 0:
        return np.zeros_like(solution.savings)
    return solution.savings / solution.total_savings


def arbitrage_residuals(
    solution: EquilibriumSolution, economy: Economy, previous_consumer_prices=None
) -> np.ndarray:
    """(r^k - delta_K) P^c + (1 - delta_K) dP^c - r^G by region, then r^G - r_F by country."""
    params = economy.parameters
    delta = params.capital_depreciation
    change = 0.0 if previous_consumer_prices is None else solution.consumer_price - previous_consumer_prices
    country = economy.topology.country_of_region
    regional = (
        (solution.rental_rate - delta) * solution.consumer_price
        + (1.0 - delta) * change
        - solution.bond_rate[country]
    )
    return np.concatenate([regional, solution.bond_rate - params.foreign_return])


def walras_residual(solution: EquilibriumSolution) -> float:
    """The redundant aggregate budget identity, in currency."""
    return solution.walras_residual


def gdp(solution: EquilibriumSolution, region: Optional[int] = None):
    """GDP_r = sum_s N P^y X, or every region's GDP when `region` is None."""
    if region is None:
        return solution.gdp
    return float(solution.gdp[region])
