# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest
from economy.errors import DomainError
from equilibrium.household import consumer_price_index, effective_consumer_prices
from equilibrium.production import (
    capital_goods_demand,
    design_productivity,
    durable_aggregate,
    durable_demand_per_firm,
    durable_price_index,
    durable_pricing_profit,
    factor_demands,
    factor_price_indices,
    final_goods_profit,
    innovation_probability,
    intermediate_price_index,
    investment_step,
    labour_index,
    leontief_output,
    marginal_cost_and_price,
    rd_balance,
    reduced_form_value_added,
    value_added,
    value_added_price,
    wage_index,
)


class TestPriceIndices:
    def test_single_durable_firm(self):
        """Test that one durable firm sets the index to its own price."""
        assert durable_price_index([2.0], [1.0], 0.5) == pytest.approx([2.0])

    def test_four_durable_firms(self):
        """Test A = 4 identical durable firms at p^z = 1 and rho = 0.5 give P^z = 0.25."""
        assert durable_price_index([1.0], [4.0], 0.5) == pytest.approx([0.25])

    def test_durable_index_needs_firms(self):
        """Test that a zero durable firm count raises DomainError."""
        with pytest.raises(DomainError):
            durable_price_index([1.0], [0.0], 0.5)

    def test_symmetric_wage_index(self):
        """Test that symmetric regions share the same wage index."""
        index = wage_index(np.full((3, 2), 1.4), np.ones((3, 2)), [1.0, 1.0], [1.0, 1.2, 1.5], 0.5)

        assert index[0] == pytest.approx(index[1])

    def test_single_intermediate_variety(self):
        """Test that one untaxed variety at unit price gives a unit intermediate index."""
        index = intermediate_price_index(np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1, 1)), 0.5)

        assert index == pytest.approx(np.ones((1, 1)))

    def test_factor_price_indices(self):
        """Test P^u = 1, P^z = 0.25 and W = 1/3 for one region with three unit skills."""
        intermediate, durable, wage = factor_price_indices(
            prices=np.ones((1, 1)),
            firms=np.ones((1, 1)),
            trade_costs=np.ones((1, 1, 1)),
            durable_prices=[1.0],
            durable_firms=[4.0],
            wages=np.ones((3, 1)),
            human_capital=np.ones((3, 1)),
            households=[1.0],
            skill_productivity=[1.0, 1.0, 1.0],
            theta=0.5,
            rho=0.5,
            sigma=0.5,
        )

        assert intermediate == pytest.approx(np.ones((1, 1)))
        assert durable == pytest.approx([0.25])
        assert wage == pytest.approx([1 / 3])


class TestValueAddedAndPricing:
    def test_value_added_price(self):
        """Test alpha = 0.5, alpha_G = 0 and P^z = W = 1 give P^y = 2."""
        price = value_added_price([1.0], [1.0], [1.0], [0.5], 0.0)

        assert price == pytest.approx(np.array([[2.0]]))

    def test_pure_capital_value_added(self):
        """Test that alpha = 1 drops the labour term: P^y = KG^(-alpha_G) P^z."""
        price = value_added_price([3.0], [7.0], [4.0], [1.0], 0.5)

        assert price == pytest.approx(np.array([[1.5]]))

    def test_missing_public_capital(self):
        """Test that KG = 0 with alpha_G > 0 raises DomainError."""
        with pytest.raises(DomainError):
            value_added_price([1.0], [1.0], [0.0], [0.5], 0.1)

    def test_markup_without_intermediates(self):
        """Test P^y = 0.8 and theta = 0.8 give p = 1."""
        _, price = marginal_cost_and_price(
            np.array([[0.8]]), np.ones((1, 1)), np.zeros((1, 1, 1)), 0.8
        )

        assert price == pytest.approx(np.array([[1.0]]))

    def test_markup_with_intermediates(self):
        """Test a = 0.5, P^u = 1, P^y = 0.5 and theta = 0.5 give MC = 1 and p = 2."""
        cost, price = marginal_cost_and_price(
            np.array([[0.5]]), np.ones((1, 1)), np.full((1, 1, 1), 0.5), 0.5
        )

        assert cost == pytest.approx(np.array([[1.0]]))
        assert price == pytest.approx(np.array([[2.0]]))

    def test_markup_is_constant(self):
        """Test that p / MC equals 1 / theta everywhere."""
        cost, price = marginal_cost_and_price(
            np.array([[0.5, 0.7], [1.1, 0.9]]),
            np.array([[1.0, 1.2], [0.8, 1.1]]),
            np.full((2, 2, 2), 0.1),
            0.6,
        )

        np.testing.assert_allclose(price / cost, np.full((2, 2), 1 / 0.6))


class TestFactorDemands:
    def test_value_added_spending_is_exhausted(self):
        """Test that P^z Z + W L equals P^y (X + FC)."""
        demands = factor_demands(
            output=np.array([[2.0]]),
            fixed_cost=np.array([[1.0]]),
            coefficients=np.zeros((1, 1, 1)),
            value_added_price=np.array([[2.0]]),
            prices=np.ones((1, 1)),
            firms=np.ones((1, 1)),
            trade_costs=np.ones((1, 1, 1)),
            intermediate_price=np.ones((1, 1)),
            durable_prices=np.array([1.0]),
            durable_index=np.array([1.0]),
            wages=np.ones((3, 1)),
            effective_hc=np.ones((3, 1)),
            wage_index=np.array([1.0]),
            capital_share=[0.5],
            theta=0.5,
            rho=0.5,
            sigma=0.5,
        )

        assert demands.durable[0, 0] + demands.labour[0, 0] == pytest.approx(6.0)
        assert demands.durable[0, 0] == pytest.approx(3.0)

    def test_durable_variety_expenditure_identity(self):
        """Test that four varieties at p^z = 1 absorb exactly P^z Z."""
        per_firm = durable_demand_per_firm(np.array([8.0]), np.array([1.0]), np.array([0.25]), 0.5)

        assert 4 * 1.0 * per_firm[0] == pytest.approx(0.25 * 8.0)

    def test_durable_aggregate_route_matches_reduced_form(self):
        """Test that y built from Z = A^(1/rho) z equals the reduced form with K = z."""
        rho, alpha, alpha_g = 0.5, 0.4, 0.1
        durable_firms, public_capital, fixed_cost = np.array([3.0]), np.array([2.0]), np.array([[0.5]])
        durable_prices = np.array([1.5])
        durable_index = durable_price_index(durable_prices, durable_firms, rho)
        wage = np.array([1.2])
        unit_cost = value_added_price(durable_index, wage, public_capital, [alpha], alpha_g)
        demands = factor_demands(
            output=np.array([[2.0]]),
            fixed_cost=fixed_cost,
            coefficients=np.zeros((1, 1, 1)),
            value_added_price=unit_cost,
            prices=np.ones((1, 1)),
            firms=np.ones((1, 1)),
            trade_costs=np.ones((1, 1, 1)),
            intermediate_price=np.ones((1, 1)),
            durable_prices=durable_prices,
            durable_index=durable_index,
            wages=np.ones((3, 1)),
            effective_hc=np.ones((3, 1)),
            wage_index=wage,
            capital_share=[alpha],
            theta=0.5,
            rho=rho,
            sigma=0.5,
        )

        aggregate = durable_aggregate(demands.durable_varieties, durable_firms, rho)
        direct = value_added(aggregate, demands.labour, public_capital, alpha, alpha_g, fixed_cost)
        reduced = reduced_form_value_added(
            durable_firms, demands.durable_varieties, demands.labour, public_capital, alpha, alpha_g, rho, fixed_cost
        )

        assert aggregate[0, 0] == pytest.approx(demands.durable[0, 0], rel=1e-10)
        assert direct[0, 0] == pytest.approx(2.0, rel=1e-10)
        assert reduced[0, 0] == pytest.approx(direct[0, 0], rel=1e-10)

    @pytest.mark.parametrize(
        'inputs, coefficients, expected',
        [([10.0, 10.0], [1.0, 1.0], 10.0), ([10.0, 8.0], [1.0, 1.0], 8.0), ([0.0, 0.0], [0.0, 0.0], 10.0)],
    )
    def test_leontief_output(self, inputs, coefficients, expected):
        """Test that output is the scarcest of value added and the used inputs."""
        assert leontief_output(10.0, inputs, coefficients) == pytest.approx(expected)

    def test_single_capital_variety(self):
        """Test that one untaxed variety at unit price delivers k = K."""
        demand = capital_goods_demand(
            5.0, np.ones((1, 1)), np.ones((1, 1, 1)), np.zeros((1, 1)), [1.0], np.array([1.0]), 0.5
        )

        assert demand[0, 0, 0] == pytest.approx(5.0)

    def test_zero_profit_output(self):
        """Test that X = (P^y FC) / ((1 - theta) / theta MC) earns zero profit."""
        profit = final_goods_profit(
            np.array([[2.0]]), np.array([[1.0]]), np.array([[0.5]]), np.array([[2.0]]), np.array([[1.0]]), 0.0
        )

        assert profit == pytest.approx(np.zeros((1, 1)))


class TestRnD:
    def setup_method(self):
        """Setup that runs before each test method."""
        self.common = dict(
            subsidy=np.zeros(1),
            wages_high=np.array([2.0]),
            effective_hc_high=np.ones(1),
            households=np.ones(1),
            membership=np.ones((1, 1)),
            union_spillover=0.0,
            national_spillover=0.0,
            supply_elasticity=0.5,
            sigma=0.5,
        )

    def test_unit_fixed_point(self):
        """Test that Omega P_J / W = 1 with eps = 0.5 supplies one design."""
        sector = rd_balance(np.ones(1), np.array([2.0]), **self.common)

        assert sector.wage_index == pytest.approx([2.0])
        assert sector.new_designs == pytest.approx([1.0])
        assert sector.labour == pytest.approx([1.0])
        assert sector.labour_demand == pytest.approx([1.0])

    def test_supply_scales_with_design_price(self):
        """Test that with eps = 0.5 doubling P_J doubles the supply of designs."""
        base = rd_balance(np.ones(1), np.array([2.0]), **self.common)
        doubled = rd_balance(np.ones(1), np.array([4.0]), **self.common)

        assert doubled.new_designs == pytest.approx(2 * base.new_designs)

    def test_without_spillovers_stocks_do_not_matter(self):
        """Test that omega = zeta = 0 makes productivity and supply independent of J."""
        assert design_productivity(np.array([3.0, 9.0]), 0.0, 0.0) == pytest.approx([1.0, 1.0])
        small = rd_balance(np.ones(1), np.array([2.0]), **self.common)
        large = rd_balance(np.full(1, 50.0), np.array([2.0]), **self.common)

        assert small.new_designs == pytest.approx(large.new_designs)

    def test_zero_profit_with_subsidy(self):
        """Test (P_J + Sub) Delta J - W_RD L_RD = 0 with spill-overs and a subsidy."""
        common = dict(self.common, subsidy=np.array([0.3, 0.1]), union_spillover=0.3, national_spillover=0.4)
        common.update(
            wages_high=np.array([1.5, 2.5, 2.0]),
            effective_hc_high=np.array([1.0, 1.2, 0.8]),
            households=np.array([2.0, 3.0, 1.0]),
            membership=np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        )

        sector = rd_balance(np.array([4.0, 2.0]), np.array([0.7, 0.9]), **common)

        receipts = (sector.design_price + sector.subsidy) * sector.new_designs
        np.testing.assert_allclose(receipts - sector.wage_index * sector.labour, 0.0, atol=1e-12)

    def test_non_positive_receipts(self):
        """Test that P_J + Sub <= 0 raises DomainError."""
        with pytest.raises(DomainError):
            rd_balance(np.ones(1), np.array([0.0]), **self.common)


class TestDurableFirms:
    def _probability(self, firms, membership, nu=0.5):
        count = len(firms)
        return innovation_probability(
            np.array(firms), np.ones(count), np.full(count, 0.5), np.ones(count), membership, nu, 1e-6
        )

    def test_symmetric_regions_share_equally(self):
        """Test that symmetric regions of one country each get 1 / R_m."""
        probability, binding = self._probability([1.0, 1.0], np.ones((1, 2)))

        assert probability == pytest.approx([0.5, 0.5])
        assert binding == []

    def test_single_region_country(self):
        """Test that a one-region country succeeds with certainty."""
        probability, _ = self._probability([2.0, 3.0], np.eye(2))

        assert probability == pytest.approx([1.0, 1.0])

    def test_firm_shares_only(self):
        """Test that nu = 1 reduces the probability to durable firm shares."""
        probability, _ = self._probability([3.0, 1.0], np.ones((1, 2)), nu=1.0)

        assert probability == pytest.approx([0.75, 0.25])

    def test_floor_binds(self):
        """Test that a vanishing probability is floored and reported."""
        probability, binding = self._probability([1.0, 1e-12], np.ones((1, 2)), nu=1.0)

        assert probability[1] == pytest.approx(1e-6)
        assert binding == [1]

    def test_durable_price(self):
        """Test r^k = 0.1, P^c = 1 and rho = 0.5 give p^z = 0.2."""
        price, _ = durable_pricing_profit([0.1], 1.0, [0.5], [0.1], [0.0], [6.0], [1.0], 0.5)

        assert price == pytest.approx([0.2])

    def test_zero_profit_output(self):
        """Test that z = (P_J + P^c FC_v) / ((1 - rho) / rho r^k P^c) earns zero profit."""
        _, profit = durable_pricing_profit([0.1], 1.0, [0.5], [0.1], [0.0], [6.0], [0.5], 0.5)

        assert profit == pytest.approx([0.0])

    @pytest.mark.parametrize(
        'next_capital, depreciation, price, expected_investment, expected_assets',
        [(10.0, 0.1, 1.0, 1.0, 1.0), (10.0, 0.0, 1.0, 0.0, 0.0), (12.0, 0.1, 2.0, 3.0, 6.0)],
    )
    def test_investment_step(
        self, next_capital, depreciation, price, expected_investment, expected_assets
    ):
        """Test I = K' - K + delta_K K and the assets P^c I that finance it."""
        investment, assets = investment_step(10.0, next_capital, depreciation, price)

        assert investment == pytest.approx(expected_investment)
        assert assets == pytest.approx(expected_assets)


class TestExpenditureIdentities:
    def setup_method(self):
        """Setup that runs before each test method."""
        self.rng = np.random.default_rng(42)

    def _demands(self, sectors=3, origins=4, regions=3):
        rng = self.rng
        theta, rho, sigma = rng.uniform(0.1, 0.9, size=3)
        prices = rng.uniform(0.2, 5.0, size=(sectors, origins))
        firms = rng.uniform(0.5, 20.0, size=(sectors, origins))
        tau = rng.uniform(1.0, 2.0, size=(sectors, origins, regions))
        durable_prices = rng.uniform(0.2, 5.0, size=regions)
        durable_firms = rng.uniform(0.5, 20.0, size=regions)
        wages = rng.uniform(0.2, 5.0, size=(3, regions))
        effective_hc = rng.uniform(0.5, 2.0, size=(3, regions))
        households = rng.uniform(0.5, 10.0, size=regions)
        durable_index = durable_price_index(durable_prices, durable_firms, rho)
        wage = labour_index(wages, effective_hc, households, sigma)
        intermediate_price = intermediate_price_index(prices, firms, tau, theta)
        demands = factor_demands(
            output=rng.uniform(0.1, 10.0, size=(sectors, regions)),
            fixed_cost=rng.uniform(0.0, 2.0, size=(sectors, regions)),
            coefficients=rng.uniform(0.0, 0.3, size=(sectors, sectors, regions)),
            value_added_price=rng.uniform(0.2, 5.0, size=(sectors, regions)),
            prices=prices,
            firms=firms,
            trade_costs=tau,
            intermediate_price=intermediate_price,
            durable_prices=durable_prices,
            durable_index=durable_index,
            wages=wages,
            effective_hc=effective_hc,
            wage_index=wage,
            capital_share=rng.uniform(0.1, 0.9, size=sectors),
            theta=theta,
            rho=rho,
            sigma=sigma,
        )
        return locals()

    def test_intermediates(self):
        """Test sum_q N tau p x = P^u X^u on 1,000 random draws."""
        for _ in range(1000):
            d = self._demands()
            effective = d['tau'] * d['prices'][:, :, None]

            spending = np.einsum('uq,uqr,uqsr->sur', d['firms'], effective, d['demands'].intermediate_varieties)

            expected = d['intermediate_price'][None, :, :] * d['demands'].intermediate
            np.testing.assert_allclose(spending, expected, rtol=1e-10)

    def test_durables(self):
        """Test A p^z z = P^z Z on 1,000 random draws."""
        for _ in range(1000):
            d = self._demands()
            demands = d['demands']

            spending = d['durable_firms'] * d['durable_prices'] * demands.durable_varieties

            np.testing.assert_allclose(spending, d['durable_index'] * demands.durable, rtol=1e-10)

    def test_labour(self):
        """Test sum_e H w l = W L on 1,000 random draws."""
        for _ in range(1000):
            d = self._demands()
            demands = d['demands']

            spending = d['households'] * np.einsum('er,esr->sr', d['wages'], demands.labour_varieties)

            np.testing.assert_allclose(spending, d['wage'] * demands.labour, rtol=1e-10)

    def test_capital_goods(self):
        """Test sum N tau (1 + t^c) p k = P^c (I + FC_v) on 1,000 random draws."""
        rng = self.rng
        for _ in range(1000):
            prices = rng.uniform(0.2, 5.0, size=(3, 4))
            firms = rng.uniform(0.5, 20.0, size=(3, 4))
            tau = rng.uniform(1.0, 2.0, size=(3, 4, 3))
            tax = rng.uniform(0.0, 0.3, size=(3, 3))
            weights = rng.uniform(0.1, 2.0, size=3)
            theta = rng.uniform(0.1, 0.9)
            volume = rng.uniform(0.1, 10.0, size=3)
            index = consumer_price_index(prices, firms, tau, tax, weights, theta)

            demand = capital_goods_demand(volume, prices, tau, tax, weights, index, theta)

            spending = np.einsum('sr,srq,srq->q', firms, effective_consumer_prices(prices, tau, tax), demand)
            np.testing.assert_allclose(spending, index * volume, rtol=1e-10)


class TestDurablePriceIndex:
    @pytest.mark.parametrize('rho', [0.2, 0.5, 0.8])
    def test_falls_with_durable_firms(self, rho):
        """Test that P^z strictly falls as A rises at an equal durable price."""
        indices = durable_price_index(np.full(4, 1.3), np.array([1.0, 2.0, 5.0, 10.0]), rho)

        assert np.all(np.diff(indices) < 0)
