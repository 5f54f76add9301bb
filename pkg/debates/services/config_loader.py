"""
CONFIGURATION LOADING
=====================

Reads the experiment configuration file (JSON), validates it with
ExperimentConfigSerializer and converts it into domain values.

INPUTS:  path to a JSON file, or an already-parsed dictionary
OUTPUTS: ExperimentSettings
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from debates.domain import (
    DEBATER_MAX_TOKENS,
    DEFAULT_MAX_TURNS,
    DEFAULT_SLOTS_PER_SIDE,
    MODERATOR_MAX_TOKENS,
    Framing,
    ModelSpec,
    ProviderPairing,
    Scenario,
    Topic,
)
from debates.exceptions import ConfigValidationError
from debates.services.grids import EXPERIMENT_A_SCENARIOS, EXPERIMENT_B_SCENARIOS
from debates.services.scripts import Script, load_scripts
from debates.services.validation import validate_experiment_data

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunParameters:
    reps: int = 10
    master_seed: int = 0
    concurrency: int = 4
    output_dir: Optional[str] = None
    framing: Framing = Framing.ORIGINAL
    max_turns: int = DEFAULT_MAX_TURNS
    slots_per_side_per_turn: int = DEFAULT_SLOTS_PER_SIDE


@dataclass(frozen=True)
class ExperimentSettings:
    topics: Tuple[Topic, ...]
    scenarios: Tuple[Scenario, ...]
    experiment_b_scenarios: Tuple[Scenario, ...]
    pairings: Tuple[ProviderPairing, ...]
    experiment_b_models: Tuple[ModelSpec, ...]
    neutral_model: ModelSpec
    scripts: Dict[str, Script] = field(default_factory=dict)
    run: RunParameters = field(default_factory=RunParameters)

    def model_specs(self) -> List[ModelSpec]:
        """Every model a run of either experiment may call, neutral model included."""
        specs: List[ModelSpec] = [self.neutral_model]
        for pairing in self.pairings:
            specs.extend([pairing.large, pairing.small])
        specs.extend(self.experiment_b_models)
        return specs

    def topic(self, topic_id: str) -> Topic:
        for topic in self.topics:
            if topic.id == topic_id:
                return topic
        raise KeyError(topic_id)


def _model(data: Dict[str, Any], default_max_tokens: int) -> ModelSpec:
    return ModelSpec.from_dict(dict(data), default_max_tokens=default_max_tokens)


def settings_from_data(data: Dict[str, Any]) -> ExperimentSettings:
    """Validate a parsed configuration dictionary and build ExperimentSettings."""
    validated = validate_experiment_data(data)

    run_data = dict(validated.get('run') or {})
    run = RunParameters(
        reps=run_data.get('reps', 10),
        master_seed=run_data.get('master_seed', 0),
        concurrency=run_data.get('concurrency', 4),
        output_dir=run_data.get('output_dir'),
        framing=Framing(run_data.get('framing', Framing.ORIGINAL.value)),
        max_turns=run_data.get('max_turns', DEFAULT_MAX_TURNS),
        slots_per_side_per_turn=run_data.get('slots_per_side_per_turn', DEFAULT_SLOTS_PER_SIDE),
    )

    scenarios = (tuple(Scenario.from_dict(dict(item)) for item in validated['scenarios'])
                 if 'scenarios' in validated else EXPERIMENT_A_SCENARIOS)
    b_scenarios = (tuple(Scenario.from_dict(dict(item)) for item in validated['experiment_b_scenarios'])
                   if 'experiment_b_scenarios' in validated else EXPERIMENT_B_SCENARIOS)

    pairings = tuple(
        ProviderPairing(
            id=item['id'],
            large=_model(item['large'], DEBATER_MAX_TOKENS),
            small=_model(item['small'], DEBATER_MAX_TOKENS),
        )
        for item in validated.get('pairings') or []
    )

    settings = ExperimentSettings(
        topics=tuple(Topic.from_dict(dict(item)) for item in validated['topics']),
        scenarios=scenarios,
        experiment_b_scenarios=b_scenarios,
        pairings=pairings,
        experiment_b_models=tuple(_model(item, DEBATER_MAX_TOKENS) for item in validated.get('experiment_b_models') or []),
        neutral_model=_model(validated['neutral_model'], MODERATOR_MAX_TOKENS),
        scripts=load_scripts(validated.get('scripts') or {}),
        run=run,
    )
    logger.debug("[INPUT DATA] %d topics, %d scenarios, %d pairings, %d Experiment B models, %d scripts",
                 len(settings.topics), len(settings.scenarios), len(settings.pairings),
                 len(settings.experiment_b_models), len(settings.scripts))
    return settings


def load_experiment_file(path: Union[str, Path]) -> ExperimentSettings:
    path = Path(path)
    try:
        with path.open(encoding='utf-8') as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigValidationError([('config', f'file not found: {path}')])
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([('config', f'invalid JSON in {path}: {exc}')])
    if not isinstance(data, dict):
        raise ConfigValidationError([('config', 'top level must be a JSON object')])
    return settings_from_data(data)
