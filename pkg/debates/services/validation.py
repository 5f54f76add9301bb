"""
CONFIGURATION VALIDATION
========================

Runs the DRF serializers over configuration dictionaries and turns their nested
error dictionaries into flat (dotted path, message) issues.

INPUTS:  DebateConfig values or raw configuration-file dictionaries
OUTPUTS: the input unchanged when valid, otherwise ConfigValidationError
"""

import logging
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from debates.domain import DebateConfig
from debates.exceptions import ConfigValidationError
from debates.serializers import DebateConfigSerializer, ExperimentConfigSerializer

logger = logging.getLogger(__name__)


def flatten_errors(detail: Any, prefix: str = '') -> List[Tuple[str, str]]:
    """
    Flatten DRF `serializer.errors` into (path, message) pairs.

    Nested serializers give dicts, many=True serializers give lists of dicts
    indexed by position, leaf errors are lists of strings.
    """
    issues: List[Tuple[str, str]] = []
    if isinstance(detail, dict):
        for key, value in detail.items():
            path = key if not prefix else (prefix if key == 'non_field_errors' else f'{prefix}.{key}')
            issues.extend(flatten_errors(value, path))
    elif isinstance(detail, (list, tuple)):
        if all(not isinstance(item, (dict, list, tuple)) for item in detail):
            issues.extend((prefix or 'config', str(item)) for item in detail)
        else:
            for index, item in enumerate(detail):
                if item:
                    issues.extend(flatten_errors(item, f'{prefix}.{index}' if prefix else str(index)))
    else:
        issues.append((prefix or 'config', str(detail)))
    return issues


def validate_config(config: DebateConfig,
                    seen_identities: Optional[Set[Tuple[Any, ...]]] = None) -> DebateConfig:
    """
    Check every invariant of one debate configuration.

    INPUTS:
        config: DebateConfig - the configuration to check
        seen_identities: Optional[Set] - identities already accepted in this
            experiment; the config's identity is added on success

    OUTPUTS:
        The same DebateConfig when valid. Raises ConfigValidationError listing
        every violated invariant otherwise.
    """
    data = config.to_dict()
    serializer = DebateConfigSerializer(data=data)
    issues: List[Tuple[str, str]] = []
    if not serializer.is_valid():
        issues.extend(flatten_errors(serializer.errors))
        for issue in flatten_errors(DebateConfigSerializer.cross_field_errors(data)):
            if issue not in issues:
                issues.append(issue)

    if seen_identities is not None:
        identity = config.identity
        if identity in seen_identities:
            issues.append(('identity', f'duplicate run identity {list(identity)}'))

    if issues:
        logger.debug("[OUTPUT RESULTS] config %s rejected: %s", config.run_id, issues)
        raise ConfigValidationError(issues)

    if seen_identities is not None:
        seen_identities.add(config.identity)
    return config


def validate_grid(configs: Iterable[DebateConfig]) -> List[DebateConfig]:
    """Validate every config of a grid, collecting all issues prefixed by grid position."""
    seen: Set[Tuple[Any, ...]] = set()
    accepted: List[DebateConfig] = []
    issues: List[Tuple[str, str]] = []
    for index, config in enumerate(configs):
        try:
            accepted.append(validate_config(config, seen))
        except ConfigValidationError as exc:
            issues.extend((f'grid.{index}.{path}', message) for path, message in exc.issues)
    if issues:
        raise ConfigValidationError(issues)
    return accepted


def validate_experiment_data(data: Dict[str, Any]) -> Dict[str, Any]:
    """Validate a raw configuration-file dictionary; returns the serializer's validated data."""
    serializer = ExperimentConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigValidationError(flatten_errors(serializer.errors))
    return serializer.validated_data
