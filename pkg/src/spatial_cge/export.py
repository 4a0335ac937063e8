# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

"""Per-period result tables and their CSV and JSON export."""

import json
import logging
import os
import pandas as pd
from economy.model import FORMAT_VERSION, SKILLS
from economy.utils import format_significant
from equilibrium.dynamics import Trajectory
from typing import Literal


logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
TABLES = ('regions', 'sectors', 'countries')


def _rounded(value: float) -> float:
    return float(format_significant(value, SIGNIFICANT_DIGITS))


def _region_rows(trajectory: Trajectory) -> list[dict]:
    topology = trajectory.economy.topology
    rows = []
    for period, (stocks, solution) in enumerate(trajectory.pairs(), start=1):
        for r, region in enumerate(topology.region_names[:-1]):
            row = {
                'period': period,
                'region': region,
                'country': topology.country_names[topology.region_country[r]],
                'consumer_price': solution.consumer_price[r],
                'durable_price': solution.durable_prices[r],
                'rental_rate': solution.rental_rate[r],
                'gdp': solution.gdp[r],
                'disposable_income': solution.disposable_income[r],
                'consumption': solution.consumption[r],
                'savings': solution.savings[r],
                'capital': stocks.capital[r],
                'investment': solution.investment[r],
                'public_capital': stocks.public_capital[r],
                'durable_firms': stocks.durable_firms[r],
                'durable_output': solution.durable_output[r],
                'innovation_probability': solution.innovation_probability[r],
                'public_demand': solution.regional_budget[r],
                'public_investment': solution.public_investment[r],
            }
            for e, skill in enumerate(SKILLS):
                row[f'wage_{skill}'] = solution.wages[e, r]
            for e, skill in enumerate(SKILLS):
                row[f'employment_{skill}'] = solution.labour[e, r]
            for e, skill in enumerate(SKILLS):
                row[f'human_capital_{skill}'] = stocks.human_capital[e, r]
            rows.append(row)
    return rows


def _sector_rows(trajectory: Trajectory) -> list[dict]:
    topology = trajectory.economy.topology
    rows = []
    for period, (stocks, solution) in enumerate(trajectory.pairs(), start=1):
        for r, region in enumerate(topology.region_names[:-1]):
            for s, sector in enumerate(topology.sector_names[:-1]):
                rows.append(
                    {
                        'period': period,
                        'region': region,
                        'sector': sector,
                        'price': solution.prices[s, r],
                        'output': solution.output[s, r],
                        'firms': stocks.firms[s, r],
                        'profit': solution.profits[s, r],
                        'value_added_price': solution.value_added_price[s, r],
                        'marginal_cost': solution.marginal_cost[s, r],
                        'demand_households': solution.demand_households[s, r],
                        'demand_firms': solution.demand_firms[s, r],
                        'demand_capital': solution.demand_capital[s, r],
                        'demand_government': solution.demand_government[s, r],
                    }
                )
    return rows


def _country_rows(trajectory: Trajectory) -> list[dict]:
    topology = trajectory.economy.topology
    rows = []
    for period, (stocks, solution) in enumerate(trajectory.pairs(), start=1):
        for m, country in enumerate(topology.country_names):
            rows.append(
                {
                    'period': period,
                    'country': country,
                    'design_price': solution.design_price[m],
                    'new_designs': solution.new_designs[m],
                    'designs': stocks.designs[m],
                    'exports': solution.exports[m],
                    'imports': solution.imports[m],
                    'trade_balance': solution.trade_balance[m],
                    'tax_revenue': solution.tax_revenue[m],
                    'subsidies': solution.subsidies[m],
                    'eu_contribution': solution.eu_contribution[m],
                    'deficit': solution.deficit[m],
                    'public_debt': stocks.public_debt[m],
                    'bond_rate': solution.bond_rate[m],
                    'current_account': solution.current_account,
                    'walras_residual': solution.walras_residual,
                }
            )
    return rows


def result_tables(trajectory: Trajectory) -> dict[str, pd.DataFrame]:
    """The `regions`, `sectors` and `countries` tables, numbers at 12 significant digits."""
    builders = {'regions': _region_rows, 'sectors': _sector_rows, 'countries': _country_rows}
    tables = {}
    for name in TABLES:
        frame = pd.DataFrame(builders[name](trajectory))
        numeric = frame.select_dtypes('number').columns.drop('period')
        frame[numeric] = frame[numeric].map(_rounded)
        tables[name] = frame
    return tables


def export_results(
    trajectory: Trajectory, path: str, fmt: Literal['csv', 'json'] = 'csv'
) -> list[str]:
    """Write the result tables under directory `path` and return the written files.

    CSV writes one file per table; JSON writes `results.json` holding every table as a
    list of records.

    Raises:
        ValueError: On an empty trajectory or an unknown format
        OSError: If a file cannot be written; the message names the path
    """
    if trajectory.periods == 0:
        raise ValueError('Cannot export an empty trajectory')
    if fmt not in ('csv', 'json'):
        raise ValueError(f"Unknown result format '{fmt}'")
    tables = result_tables(trajectory)
    written = []
    try:
        os.makedirs(path, exist_ok=True)
        if fmt == 'csv':
            for name, frame in tables.items():
                target = os.path.join(path, f'{name}.csv')
                frame.to_csv(
                    target, index=False, float_format=f'%.{SIGNIFICANT_DIGITS}g', lineterminator='\n'
                )
                written.append(target)
        else:
            target = os.path.join(path, 'results.json')
            document = {
                'format_version': FORMAT_VERSION,
                'scenario': trajectory.scenario.name,
                'periods': trajectory.periods,
            }
            for name, frame in tables.items():
                document[name] = frame.to_dict(orient='records')
            with open(target, 'w', encoding='utf-8', newline='\n') as f:
                json.dump(document, f, indent=2)
                f.write('\n')
            written.append(target)
    except OSError as e:
        raise OSError(f'Cannot write results to {path}: {e}') from e
    logger.info(f'Wrote {fmt} results for {trajectory.periods} periods to {path}')
    return written
