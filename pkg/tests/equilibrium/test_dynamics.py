# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import logging
import numpy as np
import os
import pytest
from economy.config import load_scenario
from economy.errors import NonConvergence, NonViable, ScenarioError
from economy.model import PolicyInstrument, PolicyScenario
from economy.synthetic import symmetric_economy
from equilibrium.dynamics import (
    advance_stocks,
    firm_entry_step,
    firm_targets,
    simulate,
    zero_profit_targets,
)
from equilibrium.household import consumer_price_index, consumption_demand
from equilibrium.production import (
    durable_price_index,
    innovation_probability,
    intermediate_price_index,
)
from equilibrium.solver import SolverOptions, solve_period
from spatial_cge.calibration import build_steady_state


SCENARIO_PATH = os.path.join(os.path.dirname(__file__), '..', 'fixtures', 'trade_cost_scenario.yml')


@pytest.fixture(scope='module')
def sym2():
    economy = symmetric_economy()
    return economy, solve_period(economy, period=1)


class TestZeroProfitTargets:
    def _targets(self, sym2, fixed_cost=1.0, subsidy=0.0, marginal_cost=(1.0, 1.0)):
        economy, solution = sym2
        economy = economy.model_copy(
            update={
                'parameters': economy.parameters.replace(theta=0.5, fixed_cost=np.full((1, 2), fixed_cost)),
                'fiscal': economy.fiscal.replace(final_goods_subsidy=np.full((1, 2), subsidy)),
            }
        )
        forced = solution.model_copy(
            update={
                'value_added_price': np.ones((1, 2)),
                'marginal_cost': np.array([marginal_cost]),
            }
        )
        return zero_profit_targets(forced, economy)

    def test_unit_output_target(self, sym2):
        """Test theta = 0.5, P^y = MC = 1 and FC = 1 give X* = 1."""
        output_target, _ = self._targets(sym2)

        np.testing.assert_allclose(output_target, np.ones((1, 2)))

    def test_target_is_linear_in_fixed_cost(self, sym2):
        """Test that doubling FC doubles X*."""
        base, _ = self._targets(sym2)
        doubled, _ = self._targets(sym2, fixed_cost=2.0)

        np.testing.assert_allclose(doubled, 2 * base)

    def test_durable_target(self, sym2):
        """Test z* = (P_J + P^c FC_v) / ((1-rho)/rho r^k P^c)."""
        economy, solution = sym2
        params = economy.parameters

        _, durable_target = zero_profit_targets(solution, economy)

        expected = (solution.design_price[0] + solution.consumer_price * params.durable_fixed_cost) / (
            (1 - params.rho) / params.rho * solution.rental_rate * solution.consumer_price
        )
        np.testing.assert_allclose(durable_target, expected)

    def test_non_positive_margin(self, sym2):
        """Test that a non-positive markup margin raises NonViable for the sector and region."""
        with pytest.raises(NonViable) as info:
            self._targets(sym2, marginal_cost=(0.0, 1.0))

        assert (info.value.sector, info.value.region) == (0, 0)

    def test_subsidy_covering_fixed_cost(self, sym2):
        """Test that a subsidy at least as large as P^y FC makes the target non-viable."""
        with pytest.raises(NonViable):
            self._targets(sym2, subsidy=100.0)


class TestFirmEntry:
    def test_fixed_point(self):
        """Test that N = N* is a fixed point."""
        assert firm_entry_step([4.0], [4.0], 0.5) == pytest.approx([4.0])

    def test_partial_adjustment(self):
        """Test N = 10, N* = 20 and lambda = 0.5 give N' = 15."""
        assert firm_entry_step([10.0], [20.0], 0.5) == pytest.approx([15.0])

    def test_geometric_convergence(self):
        """Test that the gap to N* shrinks by (1 - lambda) each period."""
        firms = np.array([2.0])
        for t in range(1, 6):
            firms = firm_entry_step(firms, [7.0], 0.3)
            assert abs(firms[0] - 7.0) == pytest.approx(0.7**t * 5.0)

    def test_floor_at_zero(self):
        """Test that the firm count never turns negative."""
        assert firm_entry_step([1.0], [-3.0], 1.0) == pytest.approx([0.0])

    def test_symmetric_targets(self, sym2):
        """Test that symmetric regions get identical long-run firm counts."""
        economy, solution = sym2

        firms, durable_firms = firm_targets(solution, economy)

        assert firms[0, 0] == pytest.approx(firms[0, 1], rel=1e-8)
        assert durable_firms[0] == pytest.approx(durable_firms[1], rel=1e-8)


class TestAdvanceStocks:
    def test_laws_of_motion(self, sym2):
        """Test capital, designs, public debt and the stored previous prices."""
        economy, solution = sym2

        stocks, events = advance_stocks(economy, solution, period=1)

        np.testing.assert_allclose(stocks.capital, solution.durable_output)
        np.testing.assert_allclose(stocks.designs, solution.new_designs)
        np.testing.assert_allclose(stocks.public_debt - economy.stocks.public_debt, solution.deficit)
        np.testing.assert_allclose(stocks.previous_consumer_prices, solution.consumer_price)
        np.testing.assert_allclose(stocks.previous_wages, solution.wages)
        assert events == []

    def test_asset_split_adds_up(self, sym2):
        """Test that the proportional savings split distributes D and CA exactly."""
        economy, solution = sym2
        households = economy.topology.households

        stocks, _ = advance_stocks(economy, solution)

        bonds = households @ (stocks.government_bonds - economy.stocks.government_bonds)
        foreign = households @ (stocks.foreign_bonds - economy.stocks.foreign_bonds)
        np.testing.assert_allclose(bonds, solution.deficit, atol=1e-12)
        assert foreign == pytest.approx(solution.current_account, abs=1e-12)
        np.testing.assert_allclose(stocks.public_debt, households @ stocks.government_bonds)

    def test_symmetry_is_preserved(self, sym2):
        """Test that symmetric stocks stay symmetric."""
        economy, solution = sym2

        stocks, _ = advance_stocks(economy, solution)

        assert stocks.firms[0, 0] == pytest.approx(stocks.firms[0, 1], rel=1e-8)
        assert stocks.durable_firms[0] == pytest.approx(stocks.durable_firms[1], rel=1e-8)
        assert stocks.equity[0, 0] == pytest.approx(stocks.equity[1, 1], rel=1e-8)

    def test_negative_stock_is_clipped(self, sym2, caplog):
        """Test that a negative stock is clipped to zero with an event and a warning."""
        economy, solution = sym2
        forced = solution.model_copy(update={'new_designs': np.array([-1.0])})

        with caplog.at_level(logging.WARNING, logger='equilibrium.dynamics'):
            stocks, events = advance_stocks(economy, forced, period=3)

        assert stocks.designs == pytest.approx([0.0])
        assert events == ['Period 3: clipped negative designs to zero']
        assert 'clipped negative designs' in caplog.text


class TestSimulate:
    def test_single_period_is_solve_and_advance(self, sym2):
        """Test that T = 1 equals one solve followed by one advance."""
        economy, solution = sym2

        trajectory = simulate(economy, periods=1)

        expected, _ = advance_stocks(economy, solution, period=1)
        assert trajectory.periods == 1
        assert len(trajectory.states) == 2
        np.testing.assert_array_equal(trajectory.solutions[0].prices, solution.prices)
        np.testing.assert_array_equal(trajectory.states[1].firms, expected.firms)

    def test_symmetric_trajectory(self):
        """Test that SYM2 stays symmetric over several periods."""
        trajectory = simulate(symmetric_economy(), periods=3)

        for stocks, solution in trajectory.pairs():
            assert stocks.firms[0, 0] == pytest.approx(stocks.firms[0, 1], rel=1e-8)
            assert solution.prices[0, 0] == pytest.approx(solution.prices[0, 1], rel=1e-7)

    def test_trade_cost_scenario(self):
        """Test a policy run: the north's links are cheaper in every period of the window."""
        economy = symmetric_economy()
        scenario = load_scenario(SCENARIO_PATH, economy)

        trajectory = simulate(economy, scenario)

        assert trajectory.periods == scenario.horizon
        assert trajectory.scenario.name == 'north_access'
        # the baseline economy is kept; the policy applies per period
        assert trajectory.economy.topology.trade_costs[0, 0, 1] == pytest.approx(1.3)

    def test_scenario_must_fit_economy(self):
        """Test that a scenario targeting an unknown region is refused before solving."""
        scenario = PolicyScenario(
            instruments=[PolicyInstrument(kind='PublicCapital', region='atlantis', magnitude=1.0)]
        )

        with pytest.raises(ScenarioError):
            simulate(symmetric_economy(), scenario)

    def test_at_least_one_period(self):
        """Test that a non-positive horizon is refused."""
        with pytest.raises(ValueError):
            simulate(symmetric_economy(), periods=0)

    def test_partial_trajectory_on_failure(self):
        """Test that NonConvergence carries the failing period and the partial trajectory."""
        options = SolverOptions(max_iter=1, warmup_iterations=1)

        with pytest.raises(NonConvergence) as info:
            simulate(symmetric_economy(), periods=2, options=options)

        assert info.value.period == 1
        assert info.value.trajectory.periods == 0


class TestSpatialForces:
    def test_market_crowding(self):
        """Test that per-variety demand falls as the number of firms rises, income fixed."""
        args = (np.ones((1, 1, 1)), np.zeros((1, 1)), [1.0])

        def demand(firms):
            price = consumer_price_index(np.ones((1, 1)), np.array([[firms]]), *args, 0.5)
            return consumption_demand(np.ones((1, 1)), *args, price, 100.0, 0.2, 0.5)[0, 0, 0]

        assert demand(3.0) < demand(2.0) < demand(1.0)

    def test_price_index_effect(self):
        """Test that more final-goods or durable-goods firms lower P^u and P^z."""
        tau = np.ones((1, 2, 2))
        few = intermediate_price_index(np.ones((1, 2)), np.array([[1.0, 1.0]]), tau, 0.5)
        many = intermediate_price_index(np.ones((1, 2)), np.array([[1.0, 3.0]]), tau, 0.5)

        assert np.all(many < few)
        assert durable_price_index([1.0], [6.0], 0.5) < durable_price_index([1.0], [3.0], 0.5)

    def test_localised_externalities(self):
        """Test that more durable firms in a region raise its innovation probability."""
        args = (np.ones(2), np.full(2, 0.5), np.ones(2), np.ones((1, 2)), 0.5, 1e-6)
        before, _ = innovation_probability(np.array([2.0, 2.0]), *args)
        after, _ = innovation_probability(np.array([3.0, 1.0]), *args)

        assert after[0] > before[0]


class TestMarketAccess:
    @pytest.fixture(scope='class')
    def runs(self):
        steady = build_steady_state(symmetric_economy())
        scenario = PolicyScenario(
            name='north_access',
            horizon=12,
            instruments=[
                PolicyInstrument(
                    kind='TradeCostReduction', region='north', sector='manufacturing', magnitude=0.95
                )
            ],
        )
        return steady, simulate(steady, scenario)

    def test_cheaper_links_attract_firms(self, runs):
        """Test that 5% cheaper links of the north raise its share of N and A."""
        steady, trajectory = runs
        final = trajectory.states[-1]

        firm_share = final.firms[0, 0] / np.sum(final.firms[0])
        durable_share = final.durable_firms[0] / np.sum(final.durable_firms)

        assert steady.stocks.firms[0, 0] == pytest.approx(steady.stocks.firms[0, 1], rel=1e-8)
        assert firm_share > 0.5 + 1e-6
        assert durable_share > 0.5 + 1e-6

    def test_shares_move_towards_the_north(self, runs):
        """Test that the north's firm share keeps rising while entry adjusts."""
        _, trajectory = runs
        shares = [stocks.firms[0, 0] / np.sum(stocks.firms[0]) for stocks in trajectory.states]

        assert shares[2] > shares[1] > shares[0]
