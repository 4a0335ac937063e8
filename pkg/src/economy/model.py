# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer
from typing import Annotated, Literal, Optional


SKILLS = ('lo', 'me', 'hi')
HIGH_SKILL = 2
FORMAT_VERSION = '1.0'


def frozen_array(value) -> np.ndarray:
    """Return a read-only float copy of `value`."""
    if value is None:
        return None
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(frozen_array),
    PlainSerializer(lambda array: array.tolist(), return_type=list),
]


class FrozenModel(BaseModel):
    """Immutable value object; array fields are read-only numpy arrays."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def replace(self, **changes):
        """Return a copy with `changes` applied, freezing any array values."""
        update = {
            key: frozen_array(value) if isinstance(value, (np.ndarray, list)) else value
            for key, value in changes.items()
        }
        return self.model_copy(update=update)


class EconomyTopology(FrozenModel):
    """Regions, countries, sectors and the iceberg trade-cost tensor.

    The last region is the rest of the world and the last sector is the foreign
    sector. Firm counts exist only for domestic sectors in domestic regions; the
    foreign variety is a single firm located in the rest of the world.
    """

    region_names: list[str] = Field(description='Region names, rest of world last')
    country_names: list[str] = Field(description='Country names')
    region_country: list[int] = Field(
        description='Country index of every domestic region (rest of world excluded)'
    )
    households: FloatArray = Field(
        description='Representative-household weight H_r of every domestic region'
    )
    sector_names: list[str] = Field(description='Sector names, foreign sector last')
    trade_costs: FloatArray = Field(
        description='Iceberg multipliers tau[s, origin, destination], shape (S, R, R)'
    )

    @property
    def region_count(self) -> int:
        return len(self.region_names)

    @property
    def domestic_regions(self) -> int:
        return len(self.region_names) - 1

    @property
    def rest_of_world(self) -> int:
        return len(self.region_names) - 1

    @property
    def sector_count(self) -> int:
        return len(self.sector_names)

    @property
    def domestic_sectors(self) -> int:
        return len(self.sector_names) - 1

    @property
    def foreign_sector(self) -> int:
        return len(self.sector_names) - 1

    @property
    def country_count(self) -> int:
        return len(self.country_names)

    @property
    def country_of_region(self) -> np.ndarray:
        return np.asarray(self.region_country, dtype=int)

    def regions_in_country(self, country: int) -> np.ndarray:
        return np.flatnonzero(self.country_of_region == country)

    def country_population(self) -> np.ndarray:
        """H_m for every country."""
        return np.bincount(
            self.country_of_region, weights=self.households, minlength=self.country_count
        )

    def country_membership(self) -> np.ndarray:
        """Indicator matrix of shape (M, R-1): 1 where region r belongs to country m."""
        membership = np.zeros((self.country_count, self.domestic_regions))
        membership[self.country_of_region, np.arange(self.domestic_regions)] = 1.0
        return membership

    def region_index(self, name: str) -> int:
        return self.region_names.index(name)

    def sector_index(self, name: str) -> int:
        return self.sector_names.index(name)


class ModelParameters(FrozenModel):
    """Behavioural and technology parameters, tax rates and foreign conditions.

    Dimension-dependent arrays left as None are filled with zeros by `Economy.build`.
    """

    theta: float = Field(default=0.5, description='Final-goods CES curvature, in (0,1)')
    rho: float = Field(default=0.5, description='Durable-goods CES curvature, in (0,1)')
    sigma: float = Field(default=0.5, description='Labour CES curvature, in (0,1)')
    labour_supply_elasticity: float = Field(
        default=1.0, description='kappa, curvature of the leisure sub-utility'
    )
    leisure_weight: FloatArray = Field(
        default_factory=lambda: frozen_array([1.0, 1.0, 1.0]),
        description='omega_e, leisure weight by skill (lo, me, hi)',
    )
    skill_productivity: FloatArray = Field(
        default_factory=lambda: frozen_array([0.8, 1.0, 1.25]),
        description='gamma_e, labour productivity weight by skill (lo, me, hi)',
    )
    wage_adjustment_cost: float = Field(default=0.0, description='gamma_w, wage-adjustment cost scale')
    saving_rate: float = Field(default=0.2, description='s, household saving rate')
    sector_weights: FloatArray = Field(description='beta_s, preference weight of every sector')
    capital_share: FloatArray = Field(description='alpha_s, durable-goods share by domestic sector')
    public_capital_elasticity: float = Field(default=0.1, description='alpha_G')
    technical_coefficients: FloatArray = Field(
        description='a[m, s, u], input of sector u per unit of output of domestic sector s'
    )
    fixed_cost: FloatArray = Field(
        description='FC[s, r], final-goods fixed cost in value-added units'
    )
    durable_fixed_cost: FloatArray = Field(
        description='FC_v[r], durable-goods fixed cost in units of the regional bundle'
    )
    capital_depreciation: float = Field(default=0.1, description='delta_K, per period')
    human_capital_depreciation: float = Field(default=0.0, description='delta_HC, per period')
    union_spillover: float = Field(default=0.0, description='omega, union design spill-over, < 1')
    national_spillover: float = Field(default=0.0, description='zeta, national design spill-over, < 1')
    rd_supply_elasticity: float = Field(default=0.5, description='epsilon, in (0,1)')
    innovation_weight: float = Field(default=0.5, description='nu, in (0,1)')
    entry_speed: float = Field(default=0.5, description='lambda, firm-entry speed in (0,1]')
    consumption_tax: Optional[FloatArray] = Field(default=None, description='t^c[m, s]')
    wage_tax: Optional[FloatArray] = Field(default=None, description='t^w[m]')
    capital_income_tax: Optional[FloatArray] = Field(default=None, description='t^pi[m]')
    foreign_price: float = Field(default=1.0, description='Numeraire price of the foreign variety')
    foreign_return: float = Field(default=0.03, description='r_F')
    foreign_income: float = Field(default=10.0, description='Exogenous foreign income')
    foreign_domestic_share: float = Field(
        default=0.2, description='Share of foreign income spent on domestic varieties'
    )
    education_time: Optional[FloatArray] = Field(
        default=None, description='Lambda[e, r], education time by skill and region'
    )
    probability_floor: float = Field(default=1e-6, description='Floor on innovation probability')


class FiscalInputs(FrozenModel):
    """Exogenous national expenditure blocks and EU interventions (currency unless noted)."""

    government_spending: Optional[FloatArray] = Field(
        default=None, description='G_m, real public consumption plus investment by country'
    )
    investment_share: Optional[FloatArray] = Field(
        default=None, description='Share of G_q that is public investment GI_q (default 0.5)'
    )
    household_transfers: Optional[FloatArray] = Field(default=None, description='TR_H,m')
    final_goods_subsidy: Optional[FloatArray] = Field(
        default=None, description='National subsidy envelope per (sector, region)'
    )
    durable_subsidy: Optional[FloatArray] = Field(
        default=None, description='National durable-goods subsidy envelope per region'
    )
    rd_subsidy: Optional[FloatArray] = Field(
        default=None, description='National R&D subsidy per new design, by country'
    )
    eu_transfers: Optional[FloatArray] = Field(
        default=None, description='TR_EU,q, real public demand funded by the EU per region'
    )
    eu_final_goods_subsidy: Optional[FloatArray] = Field(default=None)
    eu_durable_subsidy: Optional[FloatArray] = Field(default=None)
    eu_rd_subsidy: Optional[FloatArray] = Field(default=None)


class StockState(FrozenModel):
    """Predetermined variables carried between periods.

    Asset positions are per representative household of the holding region.
    """

    capital: FloatArray = Field(description='K per durable firm, by region')
    public_capital: FloatArray = Field(description='KG by region')
    human_capital: FloatArray = Field(description='b[e, r] per household')
    firms: FloatArray = Field(description='N[s, r], domestic sectors x domestic regions')
    durable_firms: FloatArray = Field(description='A by region')
    designs: FloatArray = Field(description='J by country')
    equity: Optional[FloatArray] = Field(
        default=None, description='B^k[holder region, issuing region] per household'
    )
    government_bonds: Optional[FloatArray] = Field(
        default=None, description='B^G[holder region, country] per household'
    )
    foreign_bonds: Optional[FloatArray] = Field(default=None, description='B^F per household')
    public_debt: Optional[FloatArray] = Field(default=None, description='B_G by country')
    previous_consumer_prices: Optional[FloatArray] = Field(
        default=None, description='P^c of the previous period; None before the first period'
    )
    previous_wages: Optional[FloatArray] = Field(
        default=None, description='w[e, r] of the previous period; None before the first period'
    )


class EquilibriumSolution(FrozenModel):
    """Solved within-period state."""

    prices: FloatArray
    durable_prices: FloatArray
    wages: FloatArray
    consumer_price: FloatArray
    intermediate_price: FloatArray
    durable_price_index: FloatArray
    wage_index: FloatArray
    rd_wage_index: FloatArray
    value_added_price: FloatArray
    marginal_cost: FloatArray
    design_price: FloatArray
    rental_rate: FloatArray
    bond_rate: FloatArray
    output: FloatArray
    durable_output: FloatArray
    labour: FloatArray
    new_designs: FloatArray
    rd_labour: FloatArray
    consumption: FloatArray
    disposable_income: FloatArray
    capital_income: FloatArray
    savings: FloatArray
    investment: FloatArray
    innovation_probability: FloatArray
    profits: FloatArray
    durable_profit: FloatArray
    demand_households: FloatArray
    demand_firms: FloatArray
    demand_capital: FloatArray
    demand_government: FloatArray
    intermediate_use: FloatArray
    factor_payments: FloatArray
    household_spending: FloatArray
    durable_fixed_spending: FloatArray
    regional_budget: FloatArray
    public_investment: FloatArray
    tax_revenue: FloatArray
    deficit: FloatArray
    subsidies: FloatArray
    eu_contribution: FloatArray
    eu_budget: float
    exports: FloatArray
    imports: FloatArray
    trade_balance: FloatArray
    current_account: float
    total_savings: float
    wage_inflation: FloatArray
    gdp: FloatArray
    walras_residual: float
    residual_norm: float = 0.0
    iterations: int = 0
    floor_binding: list[int] = Field(default_factory=list)

    @property
    def total_gdp(self) -> float:
        return float(np.sum(self.gdp))


class Economy(FrozenModel):
    """Topology, parameters, fiscal inputs and stocks of one simulated economy."""

    format_version: str = FORMAT_VERSION
    name: str = 'economy'
    topology: EconomyTopology
    parameters: ModelParameters
    fiscal: FiscalInputs = Field(default_factory=FiscalInputs)
    stocks: StockState

    @classmethod
    def build(
        cls,
        topology: EconomyTopology,
        parameters: ModelParameters,
        fiscal: FiscalInputs,
        stocks: StockState,
        name: str = 'economy',
        format_version: str = FORMAT_VERSION,
    ) -> 'Economy':
        """Assemble an economy, filling every omitted dimension-dependent array."""
        Rd = topology.domestic_regions
        Sd = topology.domestic_sectors
        S = topology.sector_count
        M = topology.country_count
        E = len(SKILLS)

        parameter_defaults = {
            'consumption_tax': np.zeros((M, S)),
            'wage_tax': np.zeros(M),
            'capital_income_tax': np.zeros(M),
            'education_time': np.zeros((E, Rd)),
        }
        fiscal_defaults = {
            'government_spending': np.zeros(M),
            'investment_share': np.full(M, 0.5),
            'household_transfers': np.zeros(M),
            'final_goods_subsidy': np.zeros((Sd, Rd)),
            'durable_subsidy': np.zeros(Rd),
            'rd_subsidy': np.zeros(M),
            'eu_transfers': np.zeros(Rd),
            'eu_final_goods_subsidy': np.zeros((Sd, Rd)),
            'eu_durable_subsidy': np.zeros(Rd),
            'eu_rd_subsidy': np.zeros(M),
        }
        stock_defaults = {
            'equity': np.zeros((Rd, Rd)),
            'government_bonds': np.zeros((Rd, M)),
            'foreign_bonds': np.zeros(Rd),
            'public_debt': np.zeros(M),
        }
        parameters = _fill_missing(parameters, parameter_defaults)
        fiscal = _fill_missing(fiscal, fiscal_defaults)
        stocks = _fill_missing(stocks, stock_defaults)
        return cls(
            format_version=format_version,
            name=name,
            topology=topology,
            parameters=parameters,
            fiscal=fiscal,
            stocks=stocks,
        )

    def with_stocks(self, stocks: StockState) -> 'Economy':
        return self.model_copy(update={'stocks': stocks})


def _fill_missing(model: FrozenModel, defaults: dict) -> FrozenModel:
    missing = {key: value for key, value in defaults.items() if getattr(model, key) is None}
    return model.replace(**missing) if missing else model


InstrumentKind = Literal[
    'RTD_subsidy',
    'HumanCapital',
    'TradeCostReduction',
    'PublicCapital',
    'FinalGoodsSubsidy',
    'DurableGoodsSubsidy',
    'TechnicalAssistance',
]


class PolicyInstrument(BaseModel):
    """One timed policy intervention."""

    model_config = ConfigDict(frozen=True)

    kind: InstrumentKind = Field(description='Instrument kind')
    region: str = Field(description='Target region (its country for R&D subsidies)')
    magnitude: float = Field(
        description='Currency for subsidies and transfers, factor for trade costs, '
        'added education time for human capital, added stock for public capital'
    )
    start: int = Field(default=1, description='First period of the window (1-based)')
    end: Optional[int] = Field(default=None, description='Last period; None means the horizon')
    sector: Optional[str] = Field(default=None, description='Target sector, where relevant')
    skill: Optional[str] = Field(default=None, description='Target skill for HumanCapital')
    destination: Optional[str] = Field(
        default=None,
        description='Destination region for TradeCostReduction; None means every link '
        'into and out of the target region',
    )
    cost: float = Field(
        default=0.0, description='EU-funded public demand (real units) added to TR_EU of the region'
    )

    def active(self, period: int, horizon: int) -> bool:
        last = self.end if self.end is not None else horizon
        return self.start <= period <= last


class PolicyScenario(BaseModel):
    """Named, timed sequence of policy instruments."""

    model_config = ConfigDict(frozen=True)

    format_version: str = FORMAT_VERSION
    name: str = Field(default='baseline', description='Scenario name')
    horizon: int = Field(default=1, description='Number of simulated periods T')
    instruments: list[PolicyInstrument] = Field(default_factory=list)
