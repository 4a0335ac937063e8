# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import json
import os
import pytest
import yaml
from spatial_cge import (
    EXIT_INVALID,
    EXIT_IO,
    EXIT_NON_CONVERGENCE,
    EXIT_OK,
    build_parser,
    main,
)


FIXTURES = os.path.join(os.path.dirname(__file__), '..', 'fixtures')
SYM2_PATH = os.path.join(FIXTURES, 'sym2.yml')
SCENARIO_PATH = os.path.join(FIXTURES, 'trade_cost_scenario.yml')


class TestParser:
    def test_common_options(self):
        """Test that every command accepts the shared solver options."""
        args = build_parser().parse_args(
            ['run', '--economy', 'e.yml', '--tol', '1e-8', '--max-iter', '50', '--periods', '4']
        )

        assert args.command == 'run'
        assert args.tol == 1e-8
        assert args.max_iter == 50
        assert args.periods == 4
        assert args.format == 'csv'

    def test_command_is_required(self):
        """Test that a missing subcommand is a usage error."""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestMain:
    def test_validate(self, capsys):
        """Test that a valid economy and scenario exit with 0."""
        code = main(['validate', '--economy', SYM2_PATH, '--scenario', SCENARIO_PATH])

        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "Economy 'sym2' is valid" in out
        assert "Scenario 'north_access' is valid (1 instruments)" in out

    def test_invalid_economy(self, tmp_path):
        """Test that a schema violation exits with 2."""
        with open(SYM2_PATH, encoding='utf-8') as f:
            document = yaml.safe_load(f)
        document['parameters']['theta'] = 1.0
        path = tmp_path / 'bad.yml'
        path.write_text(yaml.safe_dump(document))

        assert main(['validate', '--economy', str(path)]) == EXIT_INVALID

    def test_invalid_scenario(self, tmp_path):
        """Test that a scenario targeting an unknown region exits with 2."""
        path = tmp_path / 'scenario.yml'
        path.write_text(
            yaml.safe_dump(
                {'instruments': [{'kind': 'PublicCapital', 'region': 'atlantis', 'magnitude': 1.0}]}
            )
        )

        assert main(['run', '--economy', SYM2_PATH, '--scenario', str(path)]) == EXIT_INVALID

    def test_missing_file(self):
        """Test that an unreadable economy exits with 4."""
        assert main(['validate', '--economy', 'does/not/exist.yml']) == EXIT_IO

    def test_run_writes_results(self, tmp_path, capsys):
        """Test a policy run writing CSV results."""
        out = tmp_path / 'out'

        code = main(['run', '--economy', SYM2_PATH, '--scenario', SCENARIO_PATH, '--out', str(out)])

        assert code == EXIT_OK
        for name in ('regions', 'sectors', 'countries'):
            assert (out / f'{name}.csv').exists()
        assert str(out / 'regions.csv') in capsys.readouterr().out

    def test_verbose_run_writes_trace(self, tmp_path):
        """Test that --verbose dumps per-iteration solver records."""
        out = tmp_path / 'out'

        code = main(
            ['run', '--economy', SYM2_PATH, '--periods', '1', '--format', 'json', '--out', str(out), '--verbose']
        )

        assert code == EXIT_OK
        assert (out / 'results.json').exists()
        lines = (out / 'solver_trace.jsonl').read_text().splitlines()
        assert lines
        record = json.loads(lines[0])
        assert set(record) == {'period', 'method', 'iteration', 'residual', 'step'}

    def test_non_convergence(self, tmp_path):
        """Test that an unreachable tolerance exits with 3."""
        code = main(
            [
                'run',
                '--economy',
                SYM2_PATH,
                '--periods',
                '1',
                '--tol',
                '1e-300',
                '--max-iter',
                '2',
                '--out',
                str(tmp_path),
            ]
        )

        assert code == EXIT_NON_CONVERGENCE

    def test_check(self, capsys):
        """Test that check prints the solver diagnostics."""
        code = main(['check', '--economy', SYM2_PATH])

        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert 'walras_residual:' in out
        assert 'labour_market_residual:' in out

    def test_calibrate_to_stationary_benchmark(self, tmp_path):
        """Test that calibrate writes the calibrated economy and its report."""
        out = tmp_path / 'calibrated'

        code = main(['calibrate', '--economy', SYM2_PATH, '--out', str(out)])

        assert code == EXIT_OK
        assert (out / 'calibrated_economy.yml').exists()
        report = json.loads((out / 'calibration_report.json').read_text())
        assert report['price_gap'] <= 1e-8
        assert main(['validate', '--economy', str(out / 'calibrated_economy.yml')]) == EXIT_OK
