# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Representative-household demand, income, wage setting and human capital."""

import numpy as np
from economy.errors import DomainError
from economy.model import FloatArray, FrozenModel
from pydantic import Field
from typing import Optional


class HouseholdAccounts(FrozenModel):
    """Per-household accounts of every domestic region (currency unless noted)."""

    disposable_income: FloatArray = Field(description='YC')
    capital_income: FloatArray = Field(description='KI')
    adjustment_cost: FloatArray = Field(description='Gamma_w, real resource cost in currency')
    savings: FloatArray = Field(description='S_h = s * YC')
    consumption: FloatArray = Field(description='C, real index units')
    education_time: FloatArray = Field(description='Lambda[e, r]')


def ces_variety_demand(effective_price, price_index, weight, curvature: float, volume):
    """Demand for one variety of a CES bundle: (eff / (weight * P))^(1/(curvature-1)) * volume.

    Raises:
        DomainError: If a price or the index is not strictly positive
    """
    effective_price = np.asarray(effective_price, dtype=float)
    price_index = np.asarray(price_index, dtype=float)
    if np.any(effective_price <= 0) or np.any(price_index <= 0):
        raise DomainError('CES demand needs strictly positive prices')
    return (effective_price / (weight * price_index)) ** (1.0 / (curvature - 1.0)) * volume


def ces_price_index(effective_prices, counts, weights, curvature: float, axis=(0, 1)):
    """CES price index (sum N * w^(1/(1-c)) * eff^(c/(c-1)))^((c-1)/c) over `axis`.

    Varieties with a zero count are skipped, so their price may be anything.
    """
    effective_prices = np.asarray(effective_prices, dtype=float)
    present = np.broadcast_to(np.asarray(counts) > 0, effective_prices.shape)
    if np.any(effective_prices[present] <= 0):
        raise DomainError('Price index needs strictly positive effective prices')
    safe = np.where(present, effective_prices, 1.0)
    terms = (
        counts
        * weights ** (1.0 / (1.0 - curvature))
        * safe ** (curvature / (curvature - 1.0))
    )
    inner = np.sum(np.where(present, terms, 0.0), axis=axis)
    if np.any(inner <= 0):
        raise DomainError('Price index over an empty set of varieties')
    return inner ** ((curvature - 1.0) / curvature)


def effective_consumer_prices(prices, trade_costs, consumption_tax):
    """tau[s, r, q] * (1 + t^c[s, q]) * p[s, r] for every variety and destination."""
    return trade_costs * (1.0 + np.asarray(consumption_tax))[:, None, :] * np.asarray(prices)[:, :, None]


def consumer_price_index(prices, firms, trade_costs, consumption_tax, sector_weights, theta):
    """Consumer price index P^c of every destination region.

    Args:
        prices: p[s, r] for every sector and origin region
        firms: N[s, r], the number of varieties behind each price
        trade_costs: tau[s, r, q] towards the destinations of interest
        consumption_tax: t^c[s, q] applied at the destination
        sector_weights: beta[s]
        theta: goods CES curvature

    Returns:
        P^c[q]
    """
    effective = effective_consumer_prices(prices, trade_costs, consumption_tax)
    counts = np.asarray(firms, dtype=float)[:, :, None]
    weights = np.asarray(sector_weights, dtype=float)[:, None, None]
    return ces_price_index(effective, counts, weights, theta)


def consumption_demand(
    prices,
    trade_costs,
    consumption_tax,
    sector_weights,
    consumer_price,
    disposable_income,
    saving_rate: float,
    theta: float,
):
    """Household demand c[s, r, q] for the variety of (s, r) delivered to region q."""
    effective = effective_consumer_prices(prices, trade_costs, consumption_tax)
    consumer_price = np.asarray(consumer_price, dtype=float)
    volume = (1.0 - saving_rate) * np.asarray(disposable_income) / consumer_price
    weights = np.asarray(sector_weights, dtype=float)[:, None, None]
    return ces_variety_demand(effective, consumer_price, weights, theta, volume)


def equity_shares(equity, households):
    """Ownership shares s[q, r] = B^k[q, r] / a_r of the durable firms of r.

    Regions with no issued equity are owned per capita.

    Raises:
        DomainError: If issued equity is zero while a position is positive
    """
    equity = np.asarray(equity, dtype=float)
    issued = households @ equity
    if np.any((issued <= 0) & np.any(equity > 0, axis=0)):
        raise DomainError('Equity share undefined: positive holding of zero issued equity')
    per_capita = np.full_like(equity, 1.0 / np.sum(households))
    safe = np.where(issued > 0, issued, 1.0)
    return np.where(issued[None, :] > 0, equity / safe[None, :], per_capita)


def capital_income(
    equity,
    government_bonds,
    foreign_bonds,
    rental_rate,
    bond_rate,
    foreign_return: float,
    durable_profit,
    durable_firms,
    final_goods_profit: float,
    households,
):
    """Capital income KI per household of every region.

    Args:
        equity: B^k[holder, issuer] per household
        government_bonds: B^G[holder, country] per household
        foreign_bonds: B^F per household
        rental_rate: r^k by issuing region
        bond_rate: r^G by country
        foreign_return: r_F
        durable_profit: distributed profit per durable firm, by region
        durable_firms: A by region
        final_goods_profit: aggregate final-goods profit, shared equally per capita
        households: H by region
    """
    shares = equity_shares(equity, households)
    return (
        equity @ rental_rate
        + government_bonds @ bond_rate
        + foreign_return * np.asarray(foreign_bonds)
        + shares @ (np.asarray(durable_firms) * durable_profit)
        + final_goods_profit / np.sum(households)
    )


def wage_inflation(wages, previous_wages: Optional[np.ndarray]):
    """pi^w = (w - w_prev) / w; zero without a previous period."""
    wages = np.asarray(wages, dtype=float)
    if previous_wages is None:
        return np.zeros_like(wages)
    return (wages - previous_wages) / wages


def wage_adjustment_cost(wages, labour, adjustment_cost: float, inflation):
    """Gamma_w = sum_e (gamma_w / 2) * l * (dw)^2 / w per household.

    Raises:
        DomainError: If a wage is zero while gamma_w > 0
    """
    wages = np.asarray(wages, dtype=float)
    if adjustment_cost == 0:
        return np.zeros(wages.shape[1:])
    if np.any(wages == 0):
        raise DomainError('Wage adjustment cost needs non-zero wages')
    change = np.asarray(inflation) * wages
    return np.sum(0.5 * adjustment_cost * labour * change**2 / wages, axis=0)


def disposable_income(
    wages, labour, wage_tax, capital_income_tax, capital_income, transfers, wage_adjustment=0.0
):
    """YC = sum_e (1 - t^w) w l - Gamma_w + (1 - t^pi) KI + TR_H / H_m.

    `wages` and `labour` are indexed [skill, region]; every other argument by region.
    """
    labour_income = np.sum(np.asarray(wages) * np.asarray(labour), axis=0)
    return (
        (1.0 - np.asarray(wage_tax)) * labour_income
        - wage_adjustment
        + (1.0 - np.asarray(capital_income_tax)) * capital_income
        + transfers
    )


def wage_markup_denominator(
    sigma: float, saving_rate: float, adjustment_cost: float, inflation, wage_tax
):
    """eta = sigma (1 - s) - gamma_w (sigma - 1) pi^w / (1 - t^w)."""
    return sigma * (1.0 - saving_rate) - adjustment_cost * (sigma - 1.0) * np.asarray(
        inflation
    ) / (1.0 - np.asarray(wage_tax))


def required_real_wage(
    labour,
    leisure_weight,
    labour_supply_elasticity: float,
    sigma: float,
    saving_rate: float,
    adjustment_cost: float,
    inflation,
    wage_tax,
):
    """omega_e (1 - l)^(-kappa) / eta, the net real wage the household asks for.

    Raises:
        DomainError: If l is outside [0, 1) or eta <= 0
    """
    labour = np.asarray(labour, dtype=float)
    if np.any(labour < 0) or np.any(labour >= 1):
        raise DomainError('Labour supply must lie in [0, 1)')
    eta = wage_markup_denominator(sigma, saving_rate, adjustment_cost, inflation, wage_tax)
    if np.any(eta <= 0):
        raise DomainError('Singular wage markup: eta <= 0')
    omega = np.asarray(leisure_weight, dtype=float).reshape((-1,) + (1,) * (labour.ndim - 1))
    return omega * (1.0 - labour) ** (-labour_supply_elasticity) / eta


def hours_supplied(
    real_wage,
    leisure_weight,
    labour_supply_elasticity: float,
    sigma: float,
    saving_rate: float,
    adjustment_cost: float,
    inflation,
    wage_tax,
):
    """1 - (omega_e / (eta (1 - t^w) w / P^c))^(1 / kappa), the wage rule solved for hours.

    Hours below zero are returned as they are; the labour market residual needs them to
    stay smooth in the wage.

    Raises:
        DomainError: If eta <= 0 or a net real wage is not strictly positive
    """
    real_wage = np.asarray(real_wage, dtype=float)
    if np.any(real_wage <= 0):
        raise DomainError('Net real wage must be strictly positive')
    eta = wage_markup_denominator(sigma, saving_rate, adjustment_cost, inflation, wage_tax)
    if np.any(eta <= 0):
        raise DomainError('Singular wage markup: eta <= 0')
    omega = np.asarray(leisure_weight, dtype=float).reshape((-1,) + (1,) * (real_wage.ndim - 1))
    return 1.0 - (omega / (eta * real_wage)) ** (1.0 / labour_supply_elasticity)


def wage_rule_residual(
    wages,
    labour,
    consumer_price,
    inflation,
    leisure_weight,
    labour_supply_elasticity: float,
    sigma: float,
    saving_rate: float,
    adjustment_cost: float,
    wage_tax,
):
    """omega_e (1 - l)^(-kappa) / eta - (1 - t^w) w / P^c for every skill and region."""
    required = required_real_wage(
        labour,
        leisure_weight,
        labour_supply_elasticity,
        sigma,
        saving_rate,
        adjustment_cost,
        inflation,
        wage_tax,
    )
    return required - (1.0 - np.asarray(wage_tax)) * np.asarray(wages) / consumer_price


def human_capital_step(human_capital, education_time, depreciation: float):
    """b' = b (exp(Lambda) - delta_HC)."""
    return np.asarray(human_capital) * (np.exp(education_time) - depreciation)


def household_accounts(
    disposable_income,
    capital_income,
    adjustment_cost,
    consumer_price,
    saving_rate: float,
    education_time,
) -> HouseholdAccounts:
    """Split disposable income into consumption and savings."""
    disposable_income = np.asarray(disposable_income, dtype=float)
    return HouseholdAccounts(
        disposable_income=disposable_income,
        capital_income=capital_income,
        adjustment_cost=adjustment_cost,
        savings=saving_rate * disposable_income,
        consumption=(1.0 - saving_rate) * disposable_income / consumer_price,
        education_time=education_time,
    )
