"""
EXPERIMENT GRIDS
================

Builds the ordered list of DebateConfigs for each experiment.

Experiment A: scenarios a-j x topics x provider pairings x reps
Experiment B: six ratio scenarios (1:2, 1:4, 1:8 and their mirrors) x topics
              x homogeneous single-model pairings x reps

Grid order is scenario, topic, pairing, rep, so the same settings always give
the same grid and the same run ids.
"""

import logging
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

from debates.domain import (
    DebateConfig,
    Experiment,
    ExpectedConformity,
    Framing,
    ProviderPairing,
    Scenario,
    SizeClass,
)
from debates.exceptions import GridConfigurationError
from debates.services.utils import derive_seed

if TYPE_CHECKING:
    from debates.services.config_loader import ExperimentSettings

logger = logging.getLogger(__name__)


L, S = SizeClass.LARGE, SizeClass.SMALL
PRO, OPP, UND = ExpectedConformity.PROPONENT, ExpectedConformity.OPPONENT, ExpectedConformity.UNDETERMINED

# Row d is 1 Small vs 2 Small: the mirror of c, pairing with b as b pairs with a.
EXPERIMENT_A_SCENARIOS: Tuple[Scenario, ...] = (
    Scenario('a', 2, L, 1, L, PRO, ('H1',)),
    Scenario('b', 1, L, 2, L, OPP, ('H1',)),
    Scenario('c', 2, S, 1, S, PRO, ('H1',)),
    Scenario('d', 1, S, 2, S, OPP, ('H1',)),
    Scenario('e', 1, L, 1, S, PRO, ('H2',)),
    Scenario('f', 1, S, 1, L, OPP, ('H2',)),
    Scenario('g', 2, L, 1, S, PRO, ('H1', 'H2')),
    Scenario('h', 1, S, 2, L, OPP, ('H1', 'H2')),
    Scenario('i', 2, S, 1, L, UND, ('H1', 'H2')),
    Scenario('j', 1, L, 2, S, UND, ('H1', 'H2')),
)

RATIOS = (2, 4, 8)

EXPERIMENT_B_SCENARIOS: Tuple[Scenario, ...] = tuple(
    [Scenario(f'1:{ratio}', 1, L, ratio, L, OPP, ('H3',)) for ratio in RATIOS]
    + [Scenario(f'{ratio}:1', ratio, L, 1, L, PRO, ('H3',)) for ratio in RATIOS]
)

H1_PRO_MAJORITY = ('a', 'c')
H1_OPP_MAJORITY = ('b', 'd')
H2_SUPERIOR = ('e',)
H2_INFERIOR = ('f',)
FACTORIAL_SCENARIOS = ('g', 'h', 'i', 'j')


def _build(experiment: Experiment, scenarios: Sequence[Scenario], pairings: Sequence[ProviderPairing],
           settings: 'ExperimentSettings', reps: int, master_seed: int, framing: Framing) -> List[DebateConfig]:
    if not scenarios:
        raise GridConfigurationError(f'Experiment {experiment.value}: no scenarios configured')
    if not settings.topics:
        raise GridConfigurationError(f'Experiment {experiment.value}: no topics configured')
    if not pairings:
        raise GridConfigurationError(f'Experiment {experiment.value}: no provider pairings configured')
    if reps <= 0:
        raise GridConfigurationError('reps must be positive')
    if framing is Framing.REVERSED:
        missing = [topic.id for topic in settings.topics if not topic.reframed_opponent_statement]
        if missing:
            raise GridConfigurationError(f"reversed framing needs reframed statements for: {', '.join(missing)}")

    run = settings.run
    grid: List[DebateConfig] = []
    for scenario in scenarios:
        for topic in settings.topics:
            for pairing in pairings:
                for rep in range(reps):
                    identity = [experiment.value, scenario.id, topic.id, framing.value, pairing.id, rep]
                    grid.append(DebateConfig(
                        experiment=experiment,
                        scenario=scenario,
                        topic=topic,
                        framing=framing,
                        pairing=pairing,
                        neutral_model=settings.neutral_model,
                        rep_index=rep,
                        seed=derive_seed(master_seed, identity),
                        max_turns=run.max_turns,
                        slots_per_side_per_turn=run.slots_per_side_per_turn,
                    ))

    logger.info("Experiment %s grid: %d scenarios x %d topics x %d pairings x %d reps = %d debates (%s framing)",
                experiment.value, len(scenarios), len(settings.topics), len(pairings), reps, len(grid),
                framing.value)
    return grid


def build_experiment_a_grid(settings: 'ExperimentSettings', reps: Optional[int] = None,
                            master_seed: Optional[int] = None,
                            framing: Optional[Framing] = None) -> List[DebateConfig]:
    """
    INPUTS:
        settings: ExperimentSettings - loaded configuration file
        reps, master_seed, framing: overrides for the file's run parameters

    OUTPUTS:
        List[DebateConfig] of len(scenarios) x len(topics) x len(pairings) x reps
    """
    run = settings.run
    return _build(
        Experiment.A,
        settings.scenarios,
        settings.pairings,
        settings,
        run.reps if reps is None else reps,
        run.master_seed if master_seed is None else master_seed,
        Framing(framing or run.framing),
    )


def build_experiment_b_grid(settings: 'ExperimentSettings', reps: Optional[int] = None,
                            master_seed: Optional[int] = None,
                            framing: Optional[Framing] = None) -> List[DebateConfig]:
    """Same as Experiment A, over the ratio scenarios with one homogeneous pairing per model."""
    run = settings.run
    pairings = [ProviderPairing.homogeneous(spec) for spec in settings.experiment_b_models]
    for scenario in settings.experiment_b_scenarios:
        if scenario.proponent_size != scenario.opponent_size:
            raise GridConfigurationError(f'Experiment B scenario {scenario.id} mixes size classes')
    return _build(
        Experiment.B,
        settings.experiment_b_scenarios,
        pairings,
        settings,
        run.reps if reps is None else reps,
        run.master_seed if master_seed is None else master_seed,
        Framing(framing or run.framing),
    )


def build_grid(settings: 'ExperimentSettings', experiment: Experiment, **overrides) -> List[DebateConfig]:
    if Experiment(experiment) is Experiment.A:
        return build_experiment_a_grid(settings, **overrides)
    return build_experiment_b_grid(settings, **overrides)
