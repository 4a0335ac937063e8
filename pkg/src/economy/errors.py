# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

from typing import Optional


class DomainError(ValueError):
    """A formula was evaluated outside its domain (non-positive price, l >= 1, ...)."""


class ParseError(ValueError):
    """An economy or scenario document could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f'line {line}')
        if field is not None:
            location.append(f"field '{field}'")
        suffix = f' ({", ".join(location)})' if location else ''
        super().__init__(f'{message}{suffix}')


class SchemaError(ValueError):
    """A parsed document violates the schema or a model invariant."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__('Schema violations: ' + '; '.join(self.violations))


class ScenarioError(ValueError):
    """A policy scenario is invalid for the economy it is applied to."""


class NonViable(ValueError):
    """No positive zero-profit output exists for a sector in a region."""

    def __init__(self, sector: int, region: int, message: str = ''):
        self.sector = sector
        self.region = region
        super().__init__(
            message or f'Sector {sector} in region {region} has a non-positive markup margin'
        )


class NonConvergence(RuntimeError):
    """The period solver did not reach the requested tolerance."""

    def __init__(self, best_residual: float, iterations: int, period: Optional[int] = None):
        self.best_residual = best_residual
        self.iterations = iterations
        self.period = period
        where = f' in period {period}' if period is not None else ''
        super().__init__(
            f'Solver did not converge{where} after {iterations} iterations '
            f'(best residual {best_residual:.3e})'
        )


class SingularJacobian(RuntimeError):
    """The Newton system is singular; `market` names the offending residual."""

    def __init__(self, market: str):
        self.market = market
        super().__init__(f'Singular Jacobian, offending market: {market}')


class InfeasibleCalibration(ValueError):
    """Base-year data cannot be reproduced by any admissible parameter set."""

    def __init__(self, identity: str):
        self.identity = identity
        super().__init__(f'Calibration infeasible: {identity}')
