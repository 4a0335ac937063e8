# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest
import time
from economy.synthetic import random_economy, symmetric_economy
from equilibrium.dynamics import firm_targets, simulate
from equilibrium.markets import arbitrage_residuals
from equilibrium.solver import solve_period
from spatial_cge.calibration import build_steady_state
from spatial_cge.export import TABLES, export_results


REGIONAL_FIELDS = (
    'prices',
    'output',
    'wages',
    'labour',
    'consumer_price',
    'intermediate_price',
    'durable_price_index',
    'wage_index',
    'value_added_price',
    'marginal_cost',
    'rental_rate',
    'durable_output',
    'consumption',
    'disposable_income',
    'capital_income',
    'savings',
    'investment',
    'innovation_probability',
    'profits',
    'durable_profit',
    'demand_households',
    'demand_firms',
    'demand_capital',
    'demand_government',
    'gdp',
)


@pytest.fixture(scope='module')
def steady():
    return build_steady_state(symmetric_economy())


@pytest.fixture(scope='module')
def sym2_run():
    return simulate(symmetric_economy(), periods=20)


def _shape(seed: int) -> dict:
    regions = 2 + seed % 3
    return {
        'domestic_regions': regions,
        'domestic_sectors': 1 + (seed // 3) % 3,
        'countries': 1 + seed % 2,
    }


class TestRandomEconomies:
    @pytest.mark.parametrize('seed', range(10))
    def test_walras_in_every_period(self, seed):
        """Test |Walras| <= 1e-8 GDP in both periods of a seeded random economy."""
        trajectory = simulate(random_economy(seed, **_shape(seed)), periods=2)

        for solution in trajectory.solutions:
            assert abs(solution.walras_residual) <= 1e-8 * solution.total_gdp

    def test_shapes_cover_the_grid(self):
        """Test that the ten seeds span 2-4 regions and 1-3 sectors."""
        shapes = [_shape(seed) for seed in range(10)]

        assert {shape['domestic_regions'] for shape in shapes} == {2, 3, 4}
        assert {shape['domestic_sectors'] for shape in shapes} == {1, 2, 3}
        assert all(shape['countries'] <= shape['domestic_regions'] for shape in shapes)


class TestSymmetricRun:
    def test_regions_stay_identical(self, sym2_run):
        """Test cross-region differences <= 1e-9 in every solved variable over 20 periods."""
        assert sym2_run.periods == 20
        for stocks, solution in sym2_run.pairs():
            for name in REGIONAL_FIELDS:
                values = np.asarray(getattr(solution, name))
                np.testing.assert_allclose(
                    values[..., 0], values[..., 1], rtol=1e-9, atol=1e-12, err_msg=name
                )
            np.testing.assert_allclose(stocks.firms[:, 0], stocks.firms[:, 1], rtol=1e-9)
            assert stocks.durable_firms[0] == pytest.approx(stocks.durable_firms[1], rel=1e-9)

    def test_arbitrage_in_every_period(self, sym2_run):
        """Test that the arbitrage conditions hold to 1e-9 in every solved period."""
        economy = sym2_run.economy
        for stocks, solution in sym2_run.pairs():
            residuals = arbitrage_residuals(
                solution, economy.with_stocks(stocks), stocks.previous_consumer_prices
            )

            assert np.max(np.abs(residuals)) <= 1e-9


class TestStationaryRun:
    def test_flat_over_twenty_periods(self, steady):
        """Test that an empty scenario from the stationary benchmark drifts by at most 1e-8."""
        trajectory = simulate(steady, periods=20)

        first = trajectory.solutions[0]
        for stocks, solution in trajectory.pairs():
            for name in ('firms', 'durable_firms', 'capital', 'designs', 'public_capital'):
                np.testing.assert_allclose(
                    getattr(stocks, name), getattr(steady.stocks, name), rtol=1e-8, err_msg=name
                )
            for name in ('prices', 'output', 'wages', 'consumer_price', 'gdp'):
                np.testing.assert_allclose(
                    getattr(solution, name), getattr(first, name), rtol=1e-8, err_msg=name
                )

    def test_rest_point_profits(self, steady):
        """Test |pi| <= 1e-9 GDP at the stationary benchmark."""
        solution = solve_period(steady)

        assert np.max(np.abs(solution.profits)) <= 1e-9 * solution.total_gdp


class TestFirmEntryConvergence:
    @pytest.fixture(scope='class')
    def halved(self, steady):
        start = steady.with_stocks(steady.stocks.replace(firms=0.5 * steady.stocks.firms))
        return start, simulate(start, periods=20)

    def test_gap_shrinks_by_one_minus_lambda(self, halved):
        """Test N' - N* = (1 - lambda) (N - N*) in every period of the run."""
        start, trajectory = halved
        speed = start.parameters.entry_speed

        for t, (stocks, solution) in enumerate(trajectory.pairs()):
            target, _ = firm_targets(solution, start.with_stocks(stocks))
            following = trajectory.states[t + 1].firms

            np.testing.assert_allclose(
                following - target,
                (1.0 - speed) * (stocks.firms - target),
                atol=1e-9 * float(np.max(target)),
            )

    def test_converges_to_the_rest_point(self, halved, steady):
        """Test that firm counts return to the benchmark and profits die out."""
        _, trajectory = halved
        first, last = trajectory.solutions[0], trajectory.solutions[-1]

        np.testing.assert_allclose(trajectory.states[-1].firms, steady.stocks.firms, rtol=1e-3)
        assert np.max(np.abs(last.profits)) < 1e-2 * np.max(np.abs(first.profits))
        assert np.max(np.abs(last.profits)) <= 1e-3 * last.total_gdp


class TestDeskScale:
    def test_four_regions_three_sectors(self, tmp_path):
        """Test 20 periods of a 4 x 3 economy within 60 s and byte-identical exports."""
        economy = random_economy(7, domestic_regions=4, domestic_sectors=3, countries=2)

        started = time.perf_counter()
        trajectory = simulate(economy, periods=20)
        elapsed = time.perf_counter() - started
        export_results(trajectory, str(tmp_path / 'a'))
        export_results(simulate(economy, periods=20), str(tmp_path / 'b'))

        assert elapsed <= 60.0
        for name in TABLES:
            assert (tmp_path / 'a' / f'{name}.csv').read_bytes() == (
                tmp_path / 'b' / f'{name}.csv'
            ).read_bytes()
