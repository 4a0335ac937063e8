# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
from .model import SKILLS, Economy, EconomyTopology, FiscalInputs, ModelParameters, StockState
from pydantic import BaseModel, Field
from typing import Optional


class ValidationReport(BaseModel):
    """Outcome of `validate_economy`; a passing report is required before any solve."""

    passed: bool = Field(description='True when no invariant is violated')
    violations: list[str] = Field(default_factory=list, description='Violated invariants')


def _check_shape(violations: list[str], name: str, array, shape: tuple) -> bool:
    if array is None:
        violations.append(f'{name} is missing')
        return False
    if np.shape(array) != shape:
        violations.append(f'{name} has shape {np.shape(array)}, expected {shape}')
        return False
    return True


def _check_open_unit(violations: list[str], name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        violations.append(f'curvature outside (0,1): {name}={value}')


def _check_rate(violations: list[str], name: str, values) -> None:
    values = np.asarray(values, dtype=float)
    if np.any(values < 0.0) or np.any(values > 1.0):
        violations.append(f'rate outside [0,1]: {name}')


def _topology_violations(topology: EconomyTopology) -> list[str]:
    violations: list[str] = []
    R, S, M = topology.region_count, topology.sector_count, topology.country_count
    if R < 2:
        violations.append('at least one domestic region plus the rest of the world is required')
    if S < 2:
        violations.append('at least one domestic sector plus the foreign sector is required')
    if M < 1:
        violations.append('at least one country is required')
    if len(topology.region_country) != R - 1:
        violations.append(
            f'region_country lists {len(topology.region_country)} regions, expected {R - 1}'
        )
    elif any(m < 0 or m >= M for m in topology.region_country):
        violations.append('region_country references an unknown country')
    else:
        for m in range(M):
            if m not in topology.region_country:
                violations.append(f"country '{topology.country_names[m]}' has no region")
    if _check_shape(violations, 'households', topology.households, (R - 1,)):
        if np.any(topology.households <= 0):
            violations.append('household weights must be positive')
    if _check_shape(violations, 'trade_costs', topology.trade_costs, (S, R, R)):
        below = np.argwhere(topology.trade_costs < 1.0)
        for s, r, q in below[:5]:
            violations.append(
                f'trade cost below 1 at ({topology.sector_names[s]}, '
                f'{topology.region_names[r]}, {topology.region_names[q]})'
            )
    return violations


def _parameter_violations(topology: EconomyTopology, params: ModelParameters) -> list[str]:
    violations: list[str] = []
    R, S, M = topology.region_count, topology.sector_count, topology.country_count
    Rd, Sd, E = R - 1, S - 1, len(SKILLS)

    _check_open_unit(violations, 'theta', params.theta)
    _check_open_unit(violations, 'rho', params.rho)
    _check_open_unit(violations, 'sigma', params.sigma)
    if not 0.0 < params.saving_rate < 1.0:
        violations.append(f'saving rate outside (0,1): {params.saving_rate}')
    if not 0.0 < params.rd_supply_elasticity < 1.0:
        violations.append('rd_supply_elasticity outside (0,1)')
    if not 0.0 < params.entry_speed <= 1.0:
        violations.append('entry_speed outside (0,1]')
    if params.union_spillover >= 1.0 or params.national_spillover >= 1.0:
        violations.append('design spill-over elasticities must be below 1')
    if params.labour_supply_elasticity <= 0.0:
        violations.append('labour_supply_elasticity must be positive')
    if params.wage_adjustment_cost < 0.0:
        violations.append('wage_adjustment_cost must be non-negative')
    if not 0.0 < params.probability_floor < 1.0:
        violations.append('probability_floor outside (0,1)')
    if params.foreign_price <= 0.0 or params.foreign_income < 0.0:
        violations.append('foreign price must be positive and foreign income non-negative')
    for name in (
        'capital_depreciation',
        'human_capital_depreciation',
        'innovation_weight',
        'foreign_domestic_share',
        'public_capital_elasticity',
    ):
        _check_rate(violations, name, getattr(params, name))

    if _check_shape(violations, 'leisure_weight', params.leisure_weight, (E,)):
        if np.any(params.leisure_weight <= 0):
            violations.append('leisure weights must be positive')
    if _check_shape(violations, 'skill_productivity', params.skill_productivity, (E,)):
        gamma = params.skill_productivity
        if np.any(gamma <= 0) or not (gamma[0] < gamma[1] < gamma[2]):
            violations.append('skill productivity must be positive and increasing lo < me < hi')
    if _check_shape(violations, 'sector_weights', params.sector_weights, (S,)):
        if np.any(params.sector_weights <= 0):
            violations.append('sector weights must be positive')
    if _check_shape(violations, 'capital_share', params.capital_share, (Sd,)):
        _check_rate(violations, 'capital_share', params.capital_share)
    if _check_shape(
        violations, 'technical_coefficients', params.technical_coefficients, (M, Sd, S)
    ):
        if np.any(params.technical_coefficients < 0):
            violations.append('technical coefficients must be non-negative')
    if _check_shape(violations, 'fixed_cost', params.fixed_cost, (Sd, Rd)):
        if np.any(params.fixed_cost <= 0):
            violations.append('fixed costs must be strictly positive')
    if _check_shape(violations, 'durable_fixed_cost', params.durable_fixed_cost, (Rd,)):
        if np.any(params.durable_fixed_cost < 0):
            violations.append('durable fixed costs must be non-negative')
    if _check_shape(violations, 'consumption_tax', params.consumption_tax, (M, S)):
        _check_rate(violations, 'consumption_tax', params.consumption_tax)
    if _check_shape(violations, 'wage_tax', params.wage_tax, (M,)):
        _check_rate(violations, 'wage_tax', params.wage_tax)
    if _check_shape(violations, 'capital_income_tax', params.capital_income_tax, (M,)):
        _check_rate(violations, 'capital_income_tax', params.capital_income_tax)
    if _check_shape(violations, 'education_time', params.education_time, (E, Rd)):
        if np.any(params.education_time < 0):
            violations.append('education time must be non-negative')
    return violations


def _fiscal_violations(topology: EconomyTopology, fiscal: FiscalInputs) -> list[str]:
    violations: list[str] = []
    Rd, Sd, M = topology.domestic_regions, topology.domestic_sectors, topology.country_count
    shapes = {
        'government_spending': (M,),
        'investment_share': (M,),
        'household_transfers': (M,),
        'final_goods_subsidy': (Sd, Rd),
        'durable_subsidy': (Rd,),
        'rd_subsidy': (M,),
        'eu_transfers': (Rd,),
        'eu_final_goods_subsidy': (Sd, Rd),
        'eu_durable_subsidy': (Rd,),
        'eu_rd_subsidy': (M,),
    }
    for name, shape in shapes.items():
        if _check_shape(violations, name, getattr(fiscal, name), shape):
            values = getattr(fiscal, name)
            if name != 'household_transfers' and np.any(values < 0):
                violations.append(f'{name} must be non-negative')
    if fiscal.investment_share is not None:
        _check_rate(violations, 'investment_share', fiscal.investment_share)
    return violations


def _stock_violations(
    topology: EconomyTopology, params: ModelParameters, stocks: StockState
) -> list[str]:
    violations: list[str] = []
    Rd, Sd, M, E = (
        topology.domestic_regions,
        topology.domestic_sectors,
        topology.country_count,
        len(SKILLS),
    )
    shapes = {
        'capital': (Rd,),
        'public_capital': (Rd,),
        'human_capital': (E, Rd),
        'firms': (Sd, Rd),
        'durable_firms': (Rd,),
        'designs': (M,),
        'equity': (Rd, Rd),
        'government_bonds': (Rd, M),
        'foreign_bonds': (Rd,),
        'public_debt': (M,),
    }
    complete = True
    for name, shape in shapes.items():
        if _check_shape(violations, name, getattr(stocks, name), shape):
            if name not in ('foreign_bonds', 'public_debt', 'government_bonds') and np.any(
                getattr(stocks, name) < 0
            ):
                violations.append(f'stock {name} must be non-negative')
        else:
            complete = False
    if stocks.previous_consumer_prices is not None:
        _check_shape(
            violations, 'previous_consumer_prices', stocks.previous_consumer_prices, (Rd,)
        )
    if stocks.previous_wages is not None:
        _check_shape(violations, 'previous_wages', stocks.previous_wages, (E, Rd))
    if not complete:
        return violations

    if np.any(stocks.firms.sum(axis=1) <= 0):
        violations.append('every domestic sector needs firms in at least one region')
    if np.any(stocks.durable_firms <= 0):
        violations.append('every domestic region needs durable-goods firms')
    if params.public_capital_elasticity > 0 and np.any(stocks.public_capital <= 0):
        violations.append('public capital must be positive when alpha_G > 0')
    if (params.union_spillover != 0 or params.national_spillover != 0) and np.any(
        stocks.designs <= 0
    ):
        violations.append('design stocks must be positive when spill-overs are active')
    if np.any(stocks.human_capital[2] <= 0):
        violations.append('high-skilled human capital must be positive')
    held = stocks.government_bonds.T @ topology.households
    if not np.allclose(held, stocks.public_debt, rtol=1e-9, atol=1e-12):
        violations.append('government bond holdings do not sum to public debt')
    return violations


def validate_economy(
    topology: EconomyTopology,
    params: ModelParameters,
    stocks: StockState,
    fiscal: Optional[FiscalInputs] = None,
) -> ValidationReport:
    """Check every model invariant and list the violations.

    Never raises: structural problems are reported as violations too.
    """
    violations = _topology_violations(topology)
    if not violations:
        violations += _parameter_violations(topology, params)
        if fiscal is not None:
            violations += _fiscal_violations(topology, fiscal)
        violations += _stock_violations(topology, params, stocks)
    return ValidationReport(passed=not violations, violations=violations)


def validate(economy: Economy) -> ValidationReport:
    """Validate a complete economy."""
    return validate_economy(economy.topology, economy.parameters, economy.stocks, economy.fiscal)
