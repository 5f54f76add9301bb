"""
Builders shared by the debates and analysis test suites: scripted model specs,
experiment settings and synthetic transcripts with chosen verdict patterns.
"""

from datetime import datetime, timedelta, timezone
from typing import Dict, Iterable, Optional, Sequence

from debates.domain import (
    DebateConfig,
    DebateTranscript,
    EarlyTermination,
    Experiment,
    Framing,
    ModelSpec,
    ProviderKind,
    ProviderPairing,
    Scenario,
    Side,
    SizeClass,
    Topic,
    TurnRecord,
    Utterance,
    Verdict,
)
from debates.services.config_loader import ExperimentSettings, RunParameters
from debates.services.grids import EXPERIMENT_A_SCENARIOS, EXPERIMENT_B_SCENARIOS
from debates.services.scripts import Script, VerdictPolicyScript

UBI = Topic(
    id='ubi',
    title='Universal Basic Income',
    proponent_statement='Universal basic income is essential for economic security in an automated future.',
    reframed_opponent_statement='Universal basic income would weaken the incentive to work.',
    category='economy',
)
DEATH_PENALTY = Topic(
    id='death_penalty',
    title='Death Penalty',
    proponent_statement='The death penalty is a necessary deterrent for the most serious crimes.',
    reframed_opponent_statement='The death penalty should be abolished as an irreversible punishment.',
    category='justice',
)

SCENARIOS: Dict[str, Scenario] = {s.id: s for s in EXPERIMENT_A_SCENARIOS + EXPERIMENT_B_SCENARIOS}


class FixedClock:
    """Deterministic clock: each call advances one second from a fixed epoch."""

    def __init__(self, start: Optional[datetime] = None):
        self.current = start or datetime(2025, 1, 1, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        value = self.current
        self.current += timedelta(seconds=1)
        return value


def scripted_spec(model_id: str = 'scripted-large', size: SizeClass = SizeClass.LARGE,
                  script: str = 'policy', max_tokens: int = 256) -> ModelSpec:
    return ModelSpec(ProviderKind.SCRIPTED, model_id, size, max_tokens=max_tokens, script=script)


def scripted_pairing(pairing_id: str = 'scripted', script: str = 'policy') -> ProviderPairing:
    return ProviderPairing(
        id=pairing_id,
        large=scripted_spec(f'{pairing_id}-large', SizeClass.LARGE, script),
        small=scripted_spec(f'{pairing_id}-small', SizeClass.SMALL, script),
    )


def neutral_spec(script: str = 'policy') -> ModelSpec:
    return scripted_spec('scripted-neutral', SizeClass.LARGE, script, max_tokens=1024)


def experiment_settings(scripts: Optional[Dict[str, Script]] = None,
                        topics: Sequence[Topic] = (UBI,),
                        scenarios: Sequence[Scenario] = EXPERIMENT_A_SCENARIOS,
                        experiment_b_scenarios: Sequence[Scenario] = EXPERIMENT_B_SCENARIOS,
                        pairings: Optional[Sequence[ProviderPairing]] = None,
                        experiment_b_models: Sequence[ModelSpec] = (),
                        reps: int = 1, master_seed: int = 7,
                        framing: Framing = Framing.ORIGINAL) -> ExperimentSettings:
    return ExperimentSettings(
        topics=tuple(topics),
        scenarios=tuple(scenarios),
        experiment_b_scenarios=tuple(experiment_b_scenarios),
        pairings=tuple(pairings) if pairings is not None else (scripted_pairing(),),
        experiment_b_models=tuple(experiment_b_models),
        neutral_model=neutral_spec(),
        scripts=dict(scripts) if scripts is not None else {'policy': VerdictPolicyScript(p_proponent=0.5)},
        run=RunParameters(reps=reps, master_seed=master_seed, framing=framing),
    )


def debate_config(scenario_id: str = 'a', topic: Topic = UBI, rep: int = 0, seed: int = 11,
                  experiment: Optional[Experiment] = None, framing: Framing = Framing.ORIGINAL,
                  pairing: Optional[ProviderPairing] = None) -> DebateConfig:
    scenario = SCENARIOS[scenario_id]
    if experiment is None:
        experiment = Experiment.B if ':' in scenario_id else Experiment.A
    return DebateConfig(
        experiment=experiment,
        scenario=scenario,
        topic=topic,
        framing=framing,
        pairing=pairing or scripted_pairing(),
        neutral_model=neutral_spec(),
        rep_index=rep,
        seed=seed,
    )


def _first_of(config: DebateConfig, side: Side) -> str:
    return next(d.agent_id for d in config.roster() if d.side is side)


def make_transcript(verdicts: str = 'PPP', scenario_id: str = 'a', topic: Topic = UBI, rep: int = 0,
                    framing: Framing = Framing.ORIGINAL, pairing: Optional[ProviderPairing] = None,
                    early_turn: Optional[int] = None, seed: Optional[int] = None) -> DebateTranscript:
    """
    Synthetic transcript with one verdict per character of `verdicts`
    ('P' = proponent, 'O' = opponent). Complete turns carry the full 3 + 3
    slots; `early_turn` marks the last turn as ended by complete agreement.
    """
    config = debate_config(scenario_id, topic, rep, seed if seed is not None else rep + 1,
                           framing=framing, pairing=pairing)
    turns = []
    for index, mark in enumerate(verdicts, start=1):
        utterances = []
        for slot in range(1, 2 * config.slots_per_side_per_turn + 1):
            side = Side.PROPONENT if slot % 2 else Side.OPPONENT
            utterances.append(Utterance(_first_of(config, side), side, 'scripted', f'line {index}.{slot}', slot))
        side = Side.PROPONENT if mark == 'P' else Side.OPPONENT
        turns.append(TurnRecord(index, tuple(utterances), Verdict(_first_of(config, side), side, 'scripted')))
    early = None
    if early_turn is not None:
        early = EarlyTermination(turn_index=early_turn, conceding_agent_id=_first_of(config, Side.OPPONENT))
    return DebateTranscript(config=config, turns=tuple(turns), early_termination=early,
                            started_at='2025-01-01T00:00:00+00:00', finished_at='2025-01-01T00:00:01+00:00')


def make_transcripts(patterns: Iterable[str], scenario_id: str = 'a', topic: Topic = UBI,
                     start_rep: int = 0, **kwargs) -> list:
    return [make_transcript(pattern, scenario_id, topic, rep=start_rep + offset, **kwargs)
            for offset, pattern in enumerate(patterns)]


def config_file_data(**overrides) -> dict:
    """A minimal configuration file body: one topic, one scripted pairing, two reps."""
    data = {
        'topics': [{'id': 'ubi', 'title': 'UBI', 'proponent_statement': 'UBI is essential.',
                    'reframed_opponent_statement': 'UBI weakens work incentives.'}],
        'pairings': [{
            'id': 'scripted',
            'large': {'provider_kind': 'scripted', 'model_id': 'big', 'size_class': 'Large', 'script': 'policy'},
            'small': {'provider_kind': 'scripted', 'model_id': 'tiny', 'size_class': 'Small', 'script': 'policy'},
        }],
        'neutral_model': {'provider_kind': 'scripted', 'model_id': 'judge', 'size_class': 'Large',
                          'script': 'policy'},
        'scripts': {'policy': {'kind': 'verdict_policy', 'p_proponent': 0.6}},
        'run': {'reps': 2, 'master_seed': 5},
    }
    data.update(overrides)
    return data
