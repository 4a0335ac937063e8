# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import logging
import math
import numpy as np
import yaml
from .errors import ParseError, ScenarioError, SchemaError
from .model import (
    FORMAT_VERSION,
    SKILLS,
    Economy,
    EconomyTopology,
    FiscalInputs,
    ModelParameters,
    PolicyInstrument,
    PolicyScenario,
    StockState,
)
from .utils import is_format_compatible, load_yaml_document
from .validation import validate
from pydantic import BaseModel, ValidationError
from typing import Any, Optional


logger = logging.getLogger(__name__)

ECONOMY_SECTIONS = ('format_version', 'name', 'topology', 'trade_costs', 'parameters', 'fiscal', 'stocks')
TOPOLOGY_KEYS = ('regions', 'countries', 'region_country', 'households', 'sectors')
SCENARIO_KEYS = ('format_version', 'name', 'horizon', 'instruments')


def _reject_unknown(
    section: str, values: dict[str, Any], allowed, lines: dict[str, int]
) -> None:
    for key in values:
        if key not in allowed:
            field = f'{section}.{key}' if section else key
            raise ParseError(f"Unknown key '{key}'", line=lines.get(field), field=field)


def _section(document: dict[str, Any], name: str, lines: dict[str, int]) -> dict[str, Any]:
    value = document.get(name) or {}
    if not isinstance(value, dict):
        raise ParseError(f"Section '{name}' must be a mapping", line=lines.get(name), field=name)
    return value


def _schema_errors(error: ValidationError, section: str) -> list[str]:
    return [
        f'{section}.{".".join(str(part) for part in item["loc"])}: {item["msg"]}'
        for item in error.errors()
    ]


def _build_section(model: type[BaseModel], section: str, values: dict[str, Any], lines):
    _reject_unknown(section, values, model.model_fields, lines)
    for name, field in model.model_fields.items():
        if name in values or field.is_required():
            continue
        if field.default_factory is not None:
            default = field.default_factory()
        else:
            default = field.default
        if default is None:
            logger.info(f"{section}.{name} not set, using zeros")
        else:
            shown = default.tolist() if isinstance(default, np.ndarray) else default
            logger.info(f'{section}.{name} not set, using default {shown}')
    try:
        return model(**values)
    except ValidationError as e:
        raise SchemaError(_schema_errors(e, section))


def _parse_trade_costs(
    raw: dict[str, Any], regions: list[str], sectors: list[str], lines: dict[str, int]
) -> np.ndarray:
    _reject_unknown('trade_costs', raw, sectors, lines)
    tensor = np.ones((len(sectors), len(regions), len(regions)))
    missing: list[str] = []
    for s, sector in enumerate(sectors):
        rows = raw.get(sector) or {}
        _reject_unknown(f'trade_costs.{sector}', rows, regions, lines)
        for r, origin in enumerate(regions):
            row = rows.get(origin) or {}
            _reject_unknown(f'trade_costs.{sector}.{origin}', row, regions, lines)
            for q, destination in enumerate(regions):
                if destination not in row:
                    missing.append(f'missing trade cost ({sector}, {origin}, {destination})')
                    continue
                try:
                    tensor[s, r, q] = float(row[destination])
                except (TypeError, ValueError):
                    field = f'trade_costs.{sector}.{origin}.{destination}'
                    raise ParseError('Trade cost must be a number', line=lines.get(field), field=field)
    if missing:
        raise SchemaError(missing)
    return tensor


def _parse_topology(document: dict[str, Any], lines: dict[str, int]) -> EconomyTopology:
    raw = _section(document, 'topology', lines)
    _reject_unknown('topology', raw, TOPOLOGY_KEYS, lines)
    absent = [f'topology.{key} is missing' for key in TOPOLOGY_KEYS if key not in raw]
    if absent:
        raise SchemaError(absent)
    regions = [str(name) for name in raw['regions']]
    countries = [str(name) for name in raw['countries']]
    sectors = [str(name) for name in raw['sectors']]
    unknown = [name for name in raw['region_country'] if name not in countries]
    if unknown:
        raise SchemaError([f"region_country references unknown country '{name}'" for name in unknown])
    trade_costs = _parse_trade_costs(
        _section(document, 'trade_costs', lines), regions, sectors, lines
    )
    try:
        return EconomyTopology(
            region_names=regions,
            country_names=countries,
            region_country=[countries.index(name) for name in raw['region_country']],
            households=raw['households'],
            sector_names=sectors,
            trade_costs=trade_costs,
        )
    except ValidationError as e:
        raise SchemaError(_schema_errors(e, 'topology'))


def load_economy(path: str) -> Economy:
    """Load and validate an economy document.

    Omitted optional parameters take their declared defaults; each one is logged.

    Raises:
        OSError: If the file cannot be read
        ParseError: On malformed YAML or an unknown key (with line and field)
        SchemaError: On a missing or malformed entry or a violated model invariant
    """
    document, lines = load_yaml_document(path)
    _reject_unknown('', document, ECONOMY_SECTIONS, lines)
    format_version = str(document.get('format_version', FORMAT_VERSION))
    if not is_format_compatible(format_version):
        raise SchemaError([f'unsupported format_version {format_version}'])

    topology = _parse_topology(document, lines)
    parameters = _build_section(
        ModelParameters, 'parameters', _section(document, 'parameters', lines), lines
    )
    fiscal = _build_section(FiscalInputs, 'fiscal', _section(document, 'fiscal', lines), lines)
    stocks = _build_section(StockState, 'stocks', _section(document, 'stocks', lines), lines)
    economy = Economy.build(
        topology,
        parameters,
        fiscal,
        stocks,
        name=str(document.get('name', 'economy')),
        format_version=format_version,
    )
    report = validate(economy)
    if not report.passed:
        raise SchemaError(report.violations)
    logger.info(
        f"Loaded economy '{economy.name}' with {topology.domestic_regions} domestic regions "
        f'and {topology.domestic_sectors} domestic sectors from {path}'
    )
    return economy


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def _dump_section(model: BaseModel) -> dict[str, Any]:
    return {
        name: _plain(getattr(model, name))
        for name in type(model).model_fields
        if getattr(model, name) is not None
    }


def economy_document(economy: Economy) -> dict[str, Any]:
    """Build the YAML mapping that `load_economy` reads back into `economy`."""
    topology = economy.topology
    trade_costs = {
        sector: {
            origin: {
                destination: float(topology.trade_costs[s, r, q])
                for q, destination in enumerate(topology.region_names)
            }
            for r, origin in enumerate(topology.region_names)
        }
        for s, sector in enumerate(topology.sector_names)
    }
    return {
        'format_version': economy.format_version,
        'name': economy.name,
        'topology': {
            'regions': list(topology.region_names),
            'countries': list(topology.country_names),
            'region_country': [topology.country_names[m] for m in topology.region_country],
            'households': topology.households.tolist(),
            'sectors': list(topology.sector_names),
        },
        'trade_costs': trade_costs,
        'parameters': _dump_section(economy.parameters),
        'fiscal': _dump_section(economy.fiscal),
        'stocks': _dump_section(economy.stocks),
    }


def dump_economy(economy: Economy, path: Optional[str] = None) -> str:
    """Serialize `economy` to YAML, writing it to `path` when given."""
    text = yaml.safe_dump(economy_document(economy), sort_keys=False, default_flow_style=None)
    if path is not None:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.debug(f'Wrote economy document {path}')
    return text


def validate_scenario(scenario: PolicyScenario, economy: Economy) -> None:
    """Check windows and targets of every instrument against `economy`.

    Raises:
        ScenarioError: On the first invalid instrument
    """
    topology = economy.topology
    if scenario.horizon < 1:
        raise ScenarioError(f'Scenario horizon must be at least 1, got {scenario.horizon}')
    domestic_regions = topology.region_names[:-1]
    domestic_sectors = topology.sector_names[:-1]
    for index, instrument in enumerate(scenario.instruments):
        where = f'instrument {index} ({instrument.kind})'
        end = instrument.end if instrument.end is not None else scenario.horizon
        if instrument.start < 1 or end > scenario.horizon or instrument.start > end:
            raise ScenarioError(
                f'{where}: window [{instrument.start}, {end}] outside [1, {scenario.horizon}]'
            )
        if instrument.region not in domestic_regions:
            raise ScenarioError(f"{where}: unknown domestic region '{instrument.region}'")
        if not math.isfinite(instrument.magnitude) or not math.isfinite(instrument.cost):
            raise ScenarioError(f'{where}: magnitude and cost must be finite')
        if instrument.cost < 0:
            raise ScenarioError(f'{where}: cost must be non-negative')
        if instrument.sector is not None:
            allowed = (
                topology.sector_names
                if instrument.kind == 'TradeCostReduction'
                else domestic_sectors
            )
            if instrument.sector not in allowed:
                raise ScenarioError(f"{where}: unknown sector '{instrument.sector}'")
        if instrument.skill is not None and instrument.skill not in SKILLS:
            raise ScenarioError(f"{where}: unknown skill '{instrument.skill}'")
        if instrument.destination is not None and instrument.destination not in topology.region_names:
            raise ScenarioError(f"{where}: unknown destination '{instrument.destination}'")
        if instrument.kind == 'TradeCostReduction' and not 0 < instrument.magnitude < 1:
            raise ScenarioError(
                f'{where}: trade-cost factor must lie in (0, 1), got {instrument.magnitude}'
            )


def load_scenario(path: str, economy: Optional[Economy] = None) -> PolicyScenario:
    """Load a policy scenario document, validating it against `economy` when given.

    Raises:
        OSError: If the file cannot be read
        ParseError: On malformed YAML or an unknown key
        SchemaError: On a malformed instrument record
        ScenarioError: On an invalid window or target
    """
    document, lines = load_yaml_document(path)
    _reject_unknown('', document, SCENARIO_KEYS, lines)
    format_version = str(document.get('format_version', FORMAT_VERSION))
    if not is_format_compatible(format_version):
        raise SchemaError([f'unsupported format_version {format_version}'])
    records = document.get('instruments') or []
    if not isinstance(records, list):
        raise ParseError('instruments must be a list', line=lines.get('instruments'), field='instruments')
    instruments = []
    for index, record in enumerate(records):
        if not isinstance(record, dict):
            raise ParseError(f'instrument {index} must be a mapping', field='instruments')
        _reject_unknown(f'instruments[{index}]', record, PolicyInstrument.model_fields, lines)
        try:
            instruments.append(PolicyInstrument(**record))
        except ValidationError as e:
            raise SchemaError(_schema_errors(e, f'instruments[{index}]'))
    try:
        scenario = PolicyScenario(
            format_version=format_version,
            name=str(document.get('name', 'baseline')),
            horizon=document.get('horizon', 1),
            instruments=instruments,
        )
    except ValidationError as e:
        raise SchemaError(_schema_errors(e, 'scenario'))
    if economy is not None:
        validate_scenario(scenario, economy)
    logger.info(
        f"Loaded scenario '{scenario.name}' with {len(scenario.instruments)} instruments "
        f'over {scenario.horizon} periods'
    )
    return scenario
