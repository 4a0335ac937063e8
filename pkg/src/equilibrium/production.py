# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Final-goods firms, national R&D sectors and durable-goods firms."""

import logging
import numpy as np
from .household import ces_price_index, ces_variety_demand
from economy.errors import DomainError
from economy.model import FloatArray, FrozenModel
from pydantic import Field


logger = logging.getLogger(__name__)


class FactorDemands(FrozenModel):
    """Input aggregates and variety demands of the representative firm of every (s, r)."""

    intermediate: FloatArray = Field(description='X^u[s, u, r] = a[s, u] X, per firm')
    durable: FloatArray = Field(description='Z[s, r], durable-goods aggregate per firm')
    labour: FloatArray = Field(description='L[s, r], labour aggregate per firm')
    intermediate_varieties: FloatArray = Field(
        description='x[u, q, s, r], units of variety (u, q) delivered to one firm of (s, r)'
    )
    durable_varieties: FloatArray = Field(description='z[s, r], units of each durable variety')
    labour_varieties: FloatArray = Field(
        description='l[e, s, r], hours of one household of skill e hired by one firm'
    )


class RnDSector(FrozenModel):
    """National R&D sectors."""

    new_designs: FloatArray = Field(description='Delta J by country')
    design_stock: FloatArray = Field(description='J by country')
    union_stock: float = Field(description='J*, designs of the whole union')
    productivity: FloatArray = Field(description='Omega = J*^omega J^zeta')
    labour: FloatArray = Field(description='L_RD aggregate by country')
    wage_index: FloatArray = Field(description='W_RD by country')
    design_price: FloatArray = Field(description='P_J by country')
    subsidy: FloatArray = Field(description='Subsidy per design by country')
    labour_demand: FloatArray = Field(
        description='High-skill hours per household hired by the R&D sector, by region'
    )


def effective_human_capital(human_capital, skill_productivity, sigma: float):
    """b~[e, r] = gamma_e^(1/sigma) b[e, r]."""
    gamma = np.asarray(skill_productivity, dtype=float)
    return gamma.reshape((-1,) + (1,) * (np.ndim(human_capital) - 1)) ** (1.0 / sigma) * human_capital


def intermediate_price_index(prices, firms, trade_costs, theta: float):
    """P^u[u, q] = (sum_r N[u, r] (tau[u, r, q] p[u, r])^(theta/(theta-1)))^((theta-1)/theta)."""
    effective = np.asarray(trade_costs) * np.asarray(prices)[:, :, None]
    counts = np.asarray(firms, dtype=float)[:, :, None]
    return ces_price_index(effective, counts, 1.0, theta, axis=1)


def durable_price_index(durable_prices, durable_firms, rho: float):
    """P^z of symmetric durable firms: A^((rho-1)/rho) p^z.

    Raises:
        DomainError: On a non-positive price or firm count
    """
    durable_prices = np.asarray(durable_prices, dtype=float)
    durable_firms = np.asarray(durable_firms, dtype=float)
    if np.any(durable_prices <= 0) or np.any(durable_firms <= 0):
        raise DomainError('Durable price index needs positive prices and firm counts')
    return durable_firms ** ((rho - 1.0) / rho) * durable_prices


def labour_index(wages, effective_hc, households, sigma: float, axis=0):
    """(sum H b~^(sigma/(1-sigma)) w^(sigma/(sigma-1)))^((sigma-1)/sigma) over `axis`."""
    wages = np.asarray(wages, dtype=float)
    if np.any(wages <= 0):
        raise DomainError('Labour index needs strictly positive wages')
    terms = (
        households
        * np.asarray(effective_hc) ** (sigma / (1.0 - sigma))
        * wages ** (sigma / (sigma - 1.0))
    )
    inner = np.sum(terms, axis=axis)
    if np.any(inner <= 0):
        raise DomainError('Labour index over an empty workforce')
    return inner ** ((sigma - 1.0) / sigma)


def wage_index(wages, human_capital, households, skill_productivity, sigma: float):
    """W[r] over the three skills of the households of r."""
    effective = effective_human_capital(human_capital, skill_productivity, sigma)
    return labour_index(wages, effective, households, sigma, axis=0)


def rd_wage_index(wages_high, effective_hc_high, households, membership, sigma: float):
    """W_RD[m] over the high-skilled households of the regions of m."""
    wages_high = np.asarray(wages_high, dtype=float)
    if np.any(wages_high <= 0):
        raise DomainError('R&D wage index needs strictly positive wages')
    terms = (
        households
        * np.asarray(effective_hc_high) ** (sigma / (1.0 - sigma))
        * wages_high ** (sigma / (sigma - 1.0))
    )
    return (np.asarray(membership) @ terms) ** ((sigma - 1.0) / sigma)


def factor_price_indices(
    prices,
    firms,
    trade_costs,
    durable_prices,
    durable_firms,
    wages,
    human_capital,
    households,
    skill_productivity,
    theta: float,
    rho: float,
    sigma: float,
):
    """Return (P^u[u, r], P^z[r], W[r]) for the domestic regions."""
    return (
        intermediate_price_index(prices, firms, trade_costs, theta),
        durable_price_index(durable_prices, durable_firms, rho),
        wage_index(wages, human_capital, households, skill_productivity, sigma),
    )


def _cobb_douglas_term(price, share):
    share = np.asarray(share, dtype=float)
    safe = np.where(share > 0, share, 1.0)
    return np.where(share > 0, (price / safe) ** share, 1.0)


def value_added_price(
    durable_index, wage_index, public_capital, capital_share, public_capital_elasticity: float
):
    """P^y[s, r] = KG^(-alpha_G) (P^z/alpha_s)^alpha_s (W/(1-alpha_s))^(1-alpha_s).

    Raises:
        DomainError: If KG = 0 while alpha_G > 0
    """
    public_capital = np.asarray(public_capital, dtype=float)
    if public_capital_elasticity > 0 and np.any(public_capital <= 0):
        raise DomainError('Value-added price needs positive public capital when alpha_G > 0')
    alpha = np.asarray(capital_share, dtype=float)[:, None]
    return (
        public_capital ** (-public_capital_elasticity)
        * _cobb_douglas_term(np.asarray(durable_index)[None, :], alpha)
        * _cobb_douglas_term(np.asarray(wage_index)[None, :], 1.0 - alpha)
    )


def regional_coefficients(technical_coefficients, region_country):
    """a[s, u, r] of every domestic region from the national tables a[m, s, u]."""
    return np.moveaxis(np.asarray(technical_coefficients)[np.asarray(region_country)], 0, -1)


def marginal_cost_and_price(value_added_price, intermediate_price, coefficients, theta: float):
    """MC = P^y + sum_u a^u P^u and the markup price p = MC / theta."""
    marginal_cost = np.asarray(value_added_price) + np.einsum(
        'sur,ur->sr', coefficients, intermediate_price
    )
    return marginal_cost, marginal_cost / theta


def durable_demand_per_firm(durable_aggregate, durable_prices, durable_index, rho: float):
    """z = (p^z / P^z)^(1/(rho-1)) Z for each of the symmetric durable varieties."""
    return ces_variety_demand(durable_prices, durable_index, 1.0, rho, durable_aggregate)


def factor_demands(
    output,
    fixed_cost,
    coefficients,
    value_added_price,
    prices,
    firms,
    trade_costs,
    intermediate_price,
    durable_prices,
    durable_index,
    wages,
    effective_hc,
    wage_index,
    capital_share,
    theta: float,
    rho: float,
    sigma: float,
) -> FactorDemands:
    """Cost-minimizing demands of one firm of every (s, r) producing X with fixed cost FC.

    Value added X + FC is split between the durable and labour aggregates in Cobb-Douglas
    proportions; intermediates are Leontief in X. Variety demands carry no tax, and only
    intermediates carry a transport wedge.
    """
    output = np.asarray(output, dtype=float)
    gross = output + np.asarray(fixed_cost)
    alpha = np.asarray(capital_share, dtype=float)[:, None]
    spending = np.asarray(value_added_price) * gross
    durable = alpha * spending / durable_index
    labour = (1.0 - alpha) * spending / wage_index
    intermediate = np.asarray(coefficients) * output[:, None, :]

    # x[u, q, s, r]: variety (u, q) bought by a firm of (s, r)
    effective = np.asarray(trade_costs) * np.asarray(prices)[:, :, None]
    present = np.asarray(firms)[:, :, None] > 0
    unit = np.where(
        present,
        (np.where(present, effective, 1.0) / np.asarray(intermediate_price)[:, None, :])
        ** (1.0 / (theta - 1.0)),
        0.0,
    )
    intermediate_varieties = np.einsum('uqr,sur->uqsr', unit, intermediate)
    durable_varieties = durable_demand_per_firm(durable, durable_prices, durable_index, rho)
    wages = np.asarray(wages, dtype=float)
    unit_labour = (wages / (np.asarray(effective_hc) ** sigma * wage_index)) ** (1.0 / (sigma - 1.0))
    labour_varieties = unit_labour[:, None, :] * labour[None, :, :]
    return FactorDemands(
        intermediate=intermediate,
        durable=durable,
        labour=labour,
        intermediate_varieties=intermediate_varieties,
        durable_varieties=durable_varieties,
        labour_varieties=labour_varieties,
    )


def leontief_output(value_added, inputs, coefficients):
    """X = min(y, min over a^u > 0 of X^u / a^u)."""
    coefficients = np.asarray(coefficients, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    used = coefficients > 0
    ratios = np.where(used, inputs / np.where(used, coefficients, 1.0), np.inf)
    return np.minimum(value_added, np.min(ratios, axis=-1, initial=np.inf))


def durable_aggregate(durable_output, durable_firms, rho: float):
    """Z = A^(1/rho) z when every durable variety supplies z."""
    return np.asarray(durable_firms, dtype=float) ** (1.0 / rho) * durable_output


def value_added(durable, labour, public_capital, capital_share, public_capital_elasticity, fixed_cost):
    """y = Z^alpha L^(1-alpha) KG^alpha_G - FC."""
    return (
        durable**capital_share
        * labour ** (1.0 - capital_share)
        * public_capital**public_capital_elasticity
        - fixed_cost
    )


def reduced_form_value_added(
    durable_firms,
    capital,
    labour,
    public_capital,
    capital_share,
    public_capital_elasticity,
    rho: float,
    fixed_cost,
):
    """y = A^(alpha/rho) K^alpha L^(1-alpha) KG^alpha_G - FC, valid when z = K."""
    return (
        durable_firms ** (capital_share / rho)
        * capital**capital_share
        * labour ** (1.0 - capital_share)
        * public_capital**public_capital_elasticity
        - fixed_cost
    )


def final_goods_profit(
    prices, output, value_added_price, fixed_cost, marginal_cost, subsidy_per_firm
):
    """pi = p X - P^y (X + FC) - sum_u a^u P^u X + Sub."""
    intermediate_cost = np.asarray(marginal_cost) - np.asarray(value_added_price)
    return (
        np.asarray(prices) * output
        - value_added_price * (output + np.asarray(fixed_cost))
        - intermediate_cost * output
        + subsidy_per_firm
    )


def design_productivity(designs, union_spillover: float, national_spillover: float):
    """Omega[m] = J*^omega J_m^zeta with J* the union-wide stock."""
    designs = np.asarray(designs, dtype=float)
    return np.sum(designs) ** union_spillover * designs**national_spillover


def rd_balance(
    designs,
    design_price,
    subsidy,
    wages_high,
    effective_hc_high,
    households,
    membership,
    union_spillover: float,
    national_spillover: float,
    supply_elasticity: float,
    sigma: float,
) -> RnDSector:
    """Supply of new designs and the high-skilled labour the R&D sectors hire.

    Delta J = (Omega (P_J + Sub) / W_RD)^(eps/(1-eps)); the sector's revenue, subsidies
    included, pays its wage bill, L_RD = (P_J + Sub) Delta J / W_RD.

    Raises:
        DomainError: If W_RD <= 0 or P_J + Sub <= 0
    """
    design_price = np.asarray(design_price, dtype=float)
    receipts = design_price + np.asarray(subsidy, dtype=float)
    if np.any(receipts <= 0):
        raise DomainError('R&D receipts per design must be positive')
    rd_index = rd_wage_index(wages_high, effective_hc_high, households, membership, sigma)
    if np.any(rd_index <= 0):
        raise DomainError('R&D wage index must be positive')
    productivity = design_productivity(designs, union_spillover, national_spillover)
    new_designs = (productivity * receipts / rd_index) ** (
        supply_elasticity / (1.0 - supply_elasticity)
    )
    labour = receipts * new_designs / rd_index
    membership = np.asarray(membership)
    regional_index = membership.T @ rd_index
    unit = (np.asarray(wages_high) / (np.asarray(effective_hc_high) ** sigma * regional_index)) ** (
        1.0 / (sigma - 1.0)
    )
    return RnDSector(
        new_designs=new_designs,
        design_stock=designs,
        union_stock=float(np.sum(designs)),
        productivity=productivity,
        labour=labour,
        wage_index=rd_index,
        design_price=design_price,
        subsidy=subsidy,
        labour_demand=unit * (membership.T @ labour),
    )


def innovation_probability(
    durable_firms, human_capital_high, labour_high, households, membership, nu: float, floor: float
):
    """phi[r] = (A_r / A_m)^nu (HC_r / HC_m)^(1-nu), floored at `floor`.

    HC_r = H_r b_hi l_hi. Returns the probabilities and the regions where the floor binds.

    Raises:
        DomainError: If a country has no durable firms or no high-skilled work
    """
    membership = np.asarray(membership)
    durable_firms = np.asarray(durable_firms, dtype=float)
    knowledge = np.asarray(households) * human_capital_high * labour_high
    firm_totals = membership @ durable_firms
    knowledge_totals = membership @ knowledge
    if np.any(firm_totals <= 0) or np.any(knowledge_totals <= 0):
        raise DomainError('Innovation probability needs durable firms and skilled work in every country')
    probability = (durable_firms / (membership.T @ firm_totals)) ** nu * (
        knowledge / (membership.T @ knowledge_totals)
    ) ** (1.0 - nu)
    binding = [int(r) for r in np.flatnonzero(probability < floor)]
    if binding:
        logger.debug(f'Innovation probability floor binds in regions {binding}')
    return np.maximum(probability, floor), binding


def durable_pricing_profit(
    rental_rate,
    consumer_price,
    design_price,
    durable_fixed_cost,
    subsidy,
    output,
    probability,
    rho: float,
):
    """Durable price p^z = r^k P^c / rho and expected profit with K = z.

    pi = phi [p^z z - r^k P^c z - P_J - P^c FC_v + Sub]
    """
    unit_cost = np.asarray(rental_rate) * consumer_price
    price = unit_cost / rho
    profit = probability * (
        price * output - unit_cost * output - design_price
        - consumer_price * np.asarray(durable_fixed_cost) + subsidy
    )
    return price, profit


def durable_cash_flow(
    durable_price, output, design_price, probability, consumer_price, durable_fixed_cost, subsidy
):
    """Cash of an operating durable firm: p^z z - P_J / phi - P^c FC_v + Sub.

    Each operating firm pays for the 1/phi designs its success required.
    """
    return (
        durable_price * output
        - design_price / probability
        - consumer_price * np.asarray(durable_fixed_cost)
        + subsidy
    )


def capital_goods_demand(
    volume, prices, trade_costs, consumption_tax, sector_weights, consumer_price, theta: float
):
    """k[s, r, q] bought by the durable firms of q for a bundle volume (I + FC_v)."""
    effective = (
        np.asarray(trade_costs)
        * (1.0 + np.asarray(consumption_tax))[:, None, :]
        * np.asarray(prices)[:, :, None]
    )
    weights = np.asarray(sector_weights, dtype=float)[:, None, None]
    return ces_variety_demand(effective, consumer_price, weights, theta, volume)


def investment_step(capital, next_capital, depreciation: float, consumer_price):
    """I = K' - K + delta_K K and the new assets Delta a = P^c I that finance it."""
    investment = np.asarray(next_capital) - np.asarray(capital) + depreciation * np.asarray(capital)
    return investment, consumer_price * investment
