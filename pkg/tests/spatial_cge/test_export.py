# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import json
import os
import pandas as pd
import pytest
from economy.synthetic import symmetric_economy
from equilibrium.dynamics import Trajectory, simulate
from spatial_cge.export import TABLES, export_results, result_tables


@pytest.fixture(scope='module')
def trajectory():
    return simulate(symmetric_economy(), periods=2)


class TestResultTables:
    def test_table_shapes(self, trajectory):
        """Test one row per period and region, sector or country."""
        tables = result_tables(trajectory)

        assert set(tables) == set(TABLES)
        assert len(tables['regions']) == 4
        assert len(tables['sectors']) == 4
        assert len(tables['countries']) == 2
        assert list(tables['regions']['region'][:2]) == ['north', 'south']
        assert list(tables['regions']['period'].unique()) == [1, 2]

    def test_columns(self, trajectory):
        """Test the documented leading and per-skill columns."""
        tables = result_tables(trajectory)

        assert list(tables['regions'].columns[:4]) == ['period', 'region', 'country', 'consumer_price']
        for skill in ('lo', 'me', 'hi'):
            assert f'wage_{skill}' in tables['regions'].columns
            assert f'employment_{skill}' in tables['regions'].columns
        assert list(tables['sectors'].columns[:5]) == ['period', 'region', 'sector', 'price', 'output']
        assert 'walras_residual' in tables['countries'].columns


class TestExportResults:
    def test_csv_files(self, trajectory, tmp_path):
        """Test that CSV export writes one file per table without an index column."""
        written = export_results(trajectory, str(tmp_path))

        assert written == [str(tmp_path / f'{name}.csv') for name in TABLES]
        header = (tmp_path / 'regions.csv').read_text().splitlines()[0]
        assert header.startswith('period,region,country,consumer_price')

    def test_csv_is_deterministic(self, trajectory, tmp_path):
        """Test that exporting twice gives byte-identical files."""
        export_results(trajectory, str(tmp_path / 'a'))
        export_results(trajectory, str(tmp_path / 'b'))

        for name in TABLES:
            assert (tmp_path / 'a' / f'{name}.csv').read_bytes() == (
                tmp_path / 'b' / f'{name}.csv'
            ).read_bytes()

    def test_csv_and_json_agree(self, trajectory, tmp_path):
        """Test that the CSV and JSON exports carry identical numbers."""
        export_results(trajectory, str(tmp_path), 'csv')
        export_results(trajectory, str(tmp_path), 'json')

        with open(tmp_path / 'results.json', encoding='utf-8') as f:
            document = json.load(f)
        assert document['periods'] == 2
        assert document['scenario'] == 'baseline'
        for name in TABLES:
            from_csv = pd.read_csv(tmp_path / f'{name}.csv')
            from_json = pd.DataFrame(document[name])
            pd.testing.assert_frame_equal(from_csv, from_json[from_csv.columns], check_dtype=False)

    def test_empty_trajectory(self, tmp_path):
        """Test that an empty trajectory cannot be exported."""
        empty = Trajectory(economy=symmetric_economy())

        with pytest.raises(ValueError):
            export_results(empty, str(tmp_path))

    def test_unknown_format(self, trajectory, tmp_path):
        """Test that only CSV and JSON are supported."""
        with pytest.raises(ValueError):
            export_results(trajectory, str(tmp_path), 'parquet')

    def test_unwritable_path(self, trajectory, tmp_path):
        """Test that a write failure surfaces as OSError naming the path."""
        blocked = tmp_path / 'blocked'
        blocked.write_text('not a directory')

        with pytest.raises(OSError) as info:
            export_results(trajectory, str(blocked))

        assert str(blocked) in str(info.value)
        assert not os.path.isdir(blocked)
