# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Desk-scale synthetic economies for experiments and tests.

Both builders start from the same benchmark: at unit wages the markup price of every
variety is close to one, each firm sells about one unit, durable capital depreciates
within the period and the design stock equals the demand of the durable-goods firms.
"""

import numpy as np
from .model import SKILLS, Economy, EconomyTopology, FiscalInputs, ModelParameters, StockState


LEISURE_WEIGHT = (0.25, 0.23, 0.11)


def symmetric_trade_costs(domestic_regions: int, domestic_sectors: int) -> np.ndarray:
    """Trade costs of a symmetric economy: 1.05 inside a region, 1.3 between regions, 1.4 abroad."""
    R = domestic_regions + 1
    S = domestic_sectors + 1
    tau = np.full((S, R, R), 1.3)
    for r in range(R):
        tau[:, r, r] = 1.05
    tau[:, :, R - 1] = 1.4
    tau[:, R - 1, :] = 1.4
    tau[:, R - 1, R - 1] = 1.0
    # only the rest-of-world origin of the foreign variety is ever shipped
    tau[S - 1, : R - 1, :] = 1.0
    return tau


def symmetric_economy(domestic_regions: int = 2, name: str = 'sym2') -> Economy:
    """Identical domestic regions in one country with one domestic sector plus the foreign one."""
    Rd = domestic_regions
    regions = ['north', 'south'] if Rd == 2 else [f'region_{r + 1}' for r in range(Rd)]
    topology = EconomyTopology(
        region_names=regions + ['rest_of_world'],
        country_names=['home'],
        region_country=[0] * Rd,
        households=np.full(Rd, 4.0),
        sector_names=['manufacturing', 'foreign'],
        trade_costs=symmetric_trade_costs(Rd, 1),
    )
    parameters = ModelParameters(
        leisure_weight=list(LEISURE_WEIGHT),
        wage_adjustment_cost=2.0,
        sector_weights=[0.3, 0.4],
        capital_share=[0.4],
        technical_coefficients=[[[0.2, 0.05]]],
        fixed_cost=np.full((1, Rd), 1.22),
        durable_fixed_cost=np.full(Rd, 0.21),
        capital_depreciation=1.0,
        union_spillover=0.3,
        national_spillover=0.4,
        consumption_tax=[[0.1, 0.1]],
        wage_tax=[0.2],
        capital_income_tax=[0.1],
    )
    fiscal = FiscalInputs(
        government_spending=[1.0 * Rd],
        investment_share=[0.5],
        household_transfers=[0.1 * Rd],
    )
    stocks = StockState(
        capital=np.full(Rd, 0.36),
        public_capital=np.full(Rd, 0.5),
        human_capital=np.ones((len(SKILLS), Rd)),
        firms=np.full((1, Rd), 6.0),
        durable_firms=np.full(Rd, 2.8),
        designs=[2.8 * Rd**2],
        equity=np.full((Rd, Rd), 0.26 / Rd),
        government_bonds=np.full((Rd, 1), 0.25),
        foreign_bonds=np.zeros(Rd),
        public_debt=[float(Rd)],
    )
    return Economy.build(topology, parameters, fiscal, stocks, name=name)


def random_economy(
    seed: int, domestic_regions: int = 2, domestic_sectors: int = 1, countries: int = 1
) -> Economy:
    """Draw a feasible economy around the symmetric benchmark; equal seeds give equal draws.

    Households, foreign income and durable firms scale with the number of sectors, and
    sector weights shrink with the number of varieties, so hours per household and the
    consumer price stay close to the benchmark.
    """
    if countries > domestic_regions:
        raise ValueError('Every country needs at least one domestic region')
    rng = np.random.default_rng(seed)
    Rd, Sd, M = domestic_regions, domestic_sectors, countries
    R, S, E = Rd + 1, Sd + 1, len(SKILLS)

    def around(value, size=None):
        return value * rng.uniform(0.9, 1.1, size=size)

    tau = rng.uniform(1.2, 1.4, size=(S, R, R))
    for r in range(Rd):
        tau[:, r, r] = rng.uniform(1.02, 1.08, size=S)
    tau[:, :, Rd] = rng.uniform(1.3, 1.5, size=(S, R))
    tau[:, Rd, :] = rng.uniform(1.3, 1.5, size=(S, R))
    tau[:, Rd, Rd] = 1.0
    tau[Sd, :Rd, :] = 1.0

    region_country = [r % M for r in range(Rd)]
    households = around(4.0 * Sd, Rd)
    population = np.bincount(region_country, weights=households, minlength=M)
    topology = EconomyTopology(
        region_names=[f'region_{r + 1}' for r in range(Rd)] + ['rest_of_world'],
        country_names=[f'country_{m + 1}' for m in range(M)],
        region_country=region_country,
        households=households,
        sector_names=[f'sector_{s + 1}' for s in range(Sd)] + ['foreign'],
        trade_costs=tau,
    )
    theta = float(rng.uniform(0.45, 0.55))
    coefficients = np.empty((M, Sd, S))
    coefficients[:, :, :Sd] = rng.uniform(0.1, 0.2, size=(M, Sd, Sd)) / Sd
    coefficients[:, :, Sd] = rng.uniform(0.03, 0.07, size=(M, Sd))
    parameters = ModelParameters(
        theta=theta,
        leisure_weight=around(np.array(LEISURE_WEIGHT), E),
        wage_adjustment_cost=2.0,
        sector_weights=np.append(around(0.3 * np.sqrt(2.0 / (Rd * Sd)), Sd), around(0.4)),
        capital_share=rng.uniform(0.35, 0.45, size=Sd),
        technical_coefficients=coefficients,
        fixed_cost=around(1.22 * (1.0 - theta) / theta, (Sd, Rd)),
        durable_fixed_cost=around(0.21, Rd),
        capital_depreciation=1.0,
        union_spillover=0.3,
        national_spillover=0.4,
        foreign_income=float(around(5.0 * Rd * Sd)),
        consumption_tax=rng.uniform(0.05, 0.15, size=(M, S)),
        wage_tax=rng.uniform(0.15, 0.25, size=M),
        capital_income_tax=rng.uniform(0.05, 0.15, size=M),
    )
    fiscal = FiscalInputs(
        government_spending=population * around(0.25, M),
        investment_share=np.full(M, 0.5),
        household_transfers=population * 0.025,
        final_goods_subsidy=rng.uniform(0.0, 0.05, size=(Sd, Rd)),
        eu_transfers=rng.uniform(0.0, 0.05, size=Rd),
    )
    durable_firms = around(2.8 * Sd, Rd)
    membership = np.zeros((M, Rd))
    membership[region_country, np.arange(Rd)] = 1.0
    # each region of a country wins about 1 / R_m of the designs it bids for
    designs = around(membership.sum(axis=1) * (membership @ durable_firms), M)
    public_debt = around(0.25 * population, M)
    total_households = households.sum()
    stocks = StockState(
        capital=around(0.36, Rd),
        public_capital=around(0.5, Rd),
        human_capital=around(1.0, (E, Rd)),
        firms=around(6.0, (Sd, Rd)),
        durable_firms=durable_firms,
        designs=designs,
        equity=np.tile(0.37 * durable_firms / total_households, (Rd, 1)),
        government_bonds=np.tile(public_debt / total_households, (Rd, 1)),
        foreign_bonds=np.zeros(Rd),
        public_debt=public_debt,
    )
    return Economy.build(topology, parameters, fiscal, stocks, name=f'random_{seed}')
