# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""National and regional public accounts, the EU budget and policy instruments."""

import logging
import numpy as np
from .household import ces_variety_demand, effective_consumer_prices
from economy.errors import DomainError, ScenarioError
from economy.model import SKILLS, Economy, PolicyInstrument, PolicyScenario


logger = logging.getLogger(__name__)


def regional_budget(government_spending, households, region_country, eu_transfers):
    """G_q = (H_q / H_m) G_m + TR_EU,q in real units."""
    households = np.asarray(households, dtype=float)
    region_country = np.asarray(region_country, dtype=int)
    population = np.bincount(region_country, weights=households)
    return (
        households / population[region_country] * np.asarray(government_spending)[region_country]
        + np.asarray(eu_transfers)
    )


def gov_demand(
    regional_budget, prices, trade_costs, consumption_tax, sector_weights, consumer_price, theta
):
    """c_G[s, r, q] = (tau (1+t^c) p / (beta_s P^c))^(1/(theta-1)) G_q."""
    effective = effective_consumer_prices(prices, trade_costs, consumption_tax)
    weights = np.asarray(sector_weights, dtype=float)[:, None, None]
    return ces_variety_demand(effective, consumer_price, weights, theta, regional_budget)


def tax_revenue(
    purchases,
    wage_bill,
    capital_income,
    consumption_tax,
    wage_tax,
    capital_income_tax,
    region_country,
):
    """T_m from consumption, wages and capital income of the regions of m.

    Args:
        purchases: final purchases by sector and destination region, valued at
            producer-plus-transport prices, shape (S, R-1)
        wage_bill: total wages paid to the households of every region
        capital_income: total capital income of the households of every region
        consumption_tax: t^c[m, s]
        wage_tax: t^w[m]
        capital_income_tax: t^pi[m]
        region_country: country of every domestic region
    """
    region_country = np.asarray(region_country, dtype=int)
    consumption = np.sum(np.asarray(consumption_tax)[region_country].T * purchases, axis=0)
    regional = (
        consumption
        + np.asarray(wage_tax)[region_country] * wage_bill
        + np.asarray(capital_income_tax)[region_country] * capital_income
    )
    return np.bincount(region_country, weights=regional, minlength=len(wage_tax))


def deficit(
    public_spending,
    household_transfers,
    eu_contribution,
    bond_rate,
    public_debt,
    subsidies,
    revenue,
    eu_funded_spending,
    membership,
):
    """D_m = sum P^c G_q + TR_H + TR_m,EU + r^G B_G + Sub_m - T_m - sum P^c TR_EU,q.

    `public_spending` and `eu_funded_spending` are money values by region; the other
    arguments are by country.
    """
    membership = np.asarray(membership)
    return (
        membership @ public_spending
        + household_transfers
        + eu_contribution
        + np.asarray(bond_rate) * public_debt
        + subsidies
        - revenue
        - membership @ eu_funded_spending
    )


def eu_budget(
    consumer_price,
    eu_transfers,
    eu_final_goods_subsidy,
    eu_durable_subsidy,
    eu_rd_subsidy,
    new_designs,
) -> float:
    """CPF, the union's outlays of the period: funded demand plus every EU subsidy."""
    return float(
        np.sum(np.asarray(consumer_price) * eu_transfers)
        + np.sum(eu_final_goods_subsidy)
        + np.sum(eu_durable_subsidy)
        + np.sum(np.asarray(eu_rd_subsidy) * new_designs)
    )


def eu_contribution(gdp_by_country, budget: float):
    """TR_m,EU = (GDP_m / GDP) CPF.

    Raises:
        DomainError: If union GDP is not positive
    """
    gdp_by_country = np.asarray(gdp_by_country, dtype=float)
    total = np.sum(gdp_by_country)
    if total <= 0:
        raise DomainError('EU contributions need positive union GDP')
    return gdp_by_country / total * budget


def public_capital_step(public_capital, public_investment, depreciation: float):
    """KG' = KG + GI - delta_K KG."""
    public_capital = np.asarray(public_capital, dtype=float)
    return public_capital + public_investment - depreciation * public_capital


def _sectors(instrument: PolicyInstrument, names: list[str]):
    return slice(None) if instrument.sector is None else names.index(instrument.sector)


def _rtd_subsidy(inputs: dict, instrument: PolicyInstrument, economy: Economy, r: int) -> None:
    inputs['eu_rd_subsidy'][economy.topology.region_country[r]] += instrument.magnitude


def _human_capital(inputs: dict, instrument: PolicyInstrument, economy: Economy, r: int) -> None:
    skills = slice(None) if instrument.skill is None else SKILLS.index(instrument.skill)
    inputs['education_time'][skills, r] += instrument.magnitude


def _trade_cost_reduction(
    inputs: dict, instrument: PolicyInstrument, economy: Economy, r: int
) -> None:
    if not 0 < instrument.magnitude < 1:
        raise ScenarioError(
            f'Trade-cost factor must lie in (0, 1), got {instrument.magnitude}'
        )
    topology = economy.topology
    tau = inputs['trade_costs']
    links = np.zeros(tau.shape[1:], dtype=bool)
    if instrument.destination is not None:
        links[r, topology.region_index(instrument.destination)] = True
    else:
        links[r, :] = True
        links[:, r] = True
        links[r, r] = False
    if instrument.sector is None:
        # the foreign variety only ships from the rest of the world
        foreign_links = links.copy()
        foreign_links[: topology.rest_of_world, :] = False
        tau[: topology.foreign_sector, links] *= instrument.magnitude
        tau[topology.foreign_sector, foreign_links] *= instrument.magnitude
    else:
        tau[topology.sector_index(instrument.sector), links] *= instrument.magnitude


def _public_capital(inputs: dict, instrument: PolicyInstrument, economy: Economy, r: int) -> None:
    inputs['public_capital'][r] += instrument.magnitude


def _final_goods_subsidy(
    inputs: dict, instrument: PolicyInstrument, economy: Economy, r: int
) -> None:
    inputs['eu_final_goods_subsidy'][_sectors(instrument, economy.topology.sector_names), r] += (
        instrument.magnitude
    )


def _durable_goods_subsidy(
    inputs: dict, instrument: PolicyInstrument, economy: Economy, r: int
) -> None:
    inputs['eu_durable_subsidy'][r] += instrument.magnitude


def _technical_assistance(
    inputs: dict, instrument: PolicyInstrument, economy: Economy, r: int
) -> None:
    inputs['eu_transfers'][r] += instrument.magnitude


INSTRUMENT_REGISTRY = {
    'RTD_subsidy': {
        'description': 'EU subsidy per new design paid to the R&D sector of the region\'s country',
        'unit': 'currency per design',
        'handler': _rtd_subsidy,
    },
    'HumanCapital': {
        'description': 'Additional education time for one skill (or all skills) of the region',
        'unit': 'education time',
        'handler': _human_capital,
    },
    'TradeCostReduction': {
        'description': 'Multiplies the trade costs of the region\'s links, one link when a '
        'destination is given, otherwise every link into and out of the region except its internal one',
        'unit': 'factor',
        'handler': _trade_cost_reduction,
    },
    'PublicCapital': {
        'description': 'Adds to the public capital stock of the region in every period of the window',
        'unit': 'capital units',
        'handler': _public_capital,
    },
    'FinalGoodsSubsidy': {
        'description': 'EU subsidy envelope for the final-goods firms of one sector (or all) in the region',
        'unit': 'currency',
        'handler': _final_goods_subsidy,
    },
    'DurableGoodsSubsidy': {
        'description': 'EU subsidy envelope for the durable-goods firms of the region',
        'unit': 'currency',
        'handler': _durable_goods_subsidy,
    },
    'TechnicalAssistance': {
        'description': 'EU-funded public demand in the region',
        'unit': 'real public demand',
        'handler': _technical_assistance,
    },
}

_PARAMETER_INPUTS = ('education_time',)
_FISCAL_INPUTS = ('eu_transfers', 'eu_final_goods_subsidy', 'eu_durable_subsidy', 'eu_rd_subsidy')


def apply_policy(scenario: PolicyScenario, period: int, economy: Economy) -> Economy:
    """Return `economy` with every instrument active in `period` applied.

    Parameter and fiscal instruments modify the baseline inputs for the period only; the
    public-capital instrument adds to the stock, which then carries forward. Each
    instrument's cost is EU-funded public demand added to TR_EU of its region.

    Raises:
        ScenarioError: On an unknown target, or when a trade cost would fall below 1 or
            an input or stock would turn negative
    """
    active = [item for item in scenario.instruments if item.active(period, scenario.horizon)]
    if not active:
        return economy

    topology = economy.topology
    inputs = {
        'trade_costs': np.array(topology.trade_costs),
        'public_capital': np.array(economy.stocks.public_capital),
        'education_time': np.array(economy.parameters.education_time),
    }
    for name in _FISCAL_INPUTS:
        inputs[name] = np.array(getattr(economy.fiscal, name))

    for instrument in active:
        if instrument.region not in topology.region_names[:-1]:
            raise ScenarioError(f"Unknown domestic region '{instrument.region}'")
        r = topology.region_index(instrument.region)
        try:
            INSTRUMENT_REGISTRY[instrument.kind]['handler'](inputs, instrument, economy, r)
        except ValueError as e:
            raise ScenarioError(f'Invalid target for {instrument.kind}: {e}')
        inputs['eu_transfers'][r] += instrument.cost
        logger.debug(
            f'Period {period}: applied {instrument.kind} to {instrument.region} '
            f'(magnitude {instrument.magnitude}, cost {instrument.cost})'
        )

    if np.any(inputs['trade_costs'] < 1.0):
        raise ScenarioError(f'Scenario pushes a trade cost below 1 in period {period}')
    for name, values in inputs.items():
        if name != 'trade_costs' and np.any(values < 0):
            raise ScenarioError(f'Scenario makes {name} negative in period {period}')

    return economy.model_copy(
        update={
            'topology': topology.replace(trade_costs=inputs['trade_costs']),
            'parameters': economy.parameters.replace(
                **{name: inputs[name] for name in _PARAMETER_INPUTS}
            ),
            'fiscal': economy.fiscal.replace(**{name: inputs[name] for name in _FISCAL_INPUTS}),
            'stocks': economy.stocks.replace(public_capital=inputs['public_capital']),
        }
    )
