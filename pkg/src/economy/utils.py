# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0

import logging
import yaml
from .errors import ParseError
from semver import Version
from typing import Any


logger = logging.getLogger(__name__)

MIN_FORMAT_VERSION = '1.0.0'
MAX_FORMAT_VERSION = '1.99.99'


def is_format_compatible(format_version: str | None) -> bool:
    """Check if a document's format_version can be read by this release.

    Args:
        format_version (str): The version declared by the document

    Returns:
        bool: True if the version lies in the supported range, False otherwise
    """
    if not format_version:
        return False
    try:
        current = Version.parse(str(format_version), optional_minor_and_patch=True)
    except ValueError:
        return False
    minimum = Version.parse(MIN_FORMAT_VERSION)
    maximum = Version.parse(MAX_FORMAT_VERSION)
    return minimum <= current <= maximum


def _collect_key_lines(node: yaml.Node, prefix: str, lines: dict[str, int]) -> None:
    if not isinstance(node, yaml.MappingNode):
        return
    for key_node, value_node in node.value:
        name = f'{prefix}{key_node.value}'
        lines[name] = key_node.start_mark.line + 1
        _collect_key_lines(value_node, f'{name}.', lines)


def load_yaml_document(path: str) -> tuple[dict[str, Any], dict[str, int]]:
    """Read a YAML mapping from `path`.

    Returns:
        The parsed mapping and the 1-based line of every mapping key, keyed by
        its dotted path (for example `parameters.theta`).

    Raises:
        OSError: If the file cannot be read
        ParseError: If the YAML is malformed or is not a mapping
    """
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        document = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(f'Invalid YAML in {path}: {getattr(e, "problem", e)}', line=line)
    if not isinstance(document, dict):
        raise ParseError(f'Expected a mapping at the top of {path}')
    lines: dict[str, int] = {}
    _collect_key_lines(root, '', lines)
    logger.debug(f'Loaded YAML document {path} with sections {sorted(document)}')
    return document, lines


def format_significant(value: float, digits: int = 12) -> str:
    """Format a float with a fixed number of significant digits."""
    text = f'{float(value):.{digits}g}'
    return '0' if text == '-0' else text
