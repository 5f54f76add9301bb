"""
CORE DOMAIN
===========

Shared vocabulary for the debate protocol, metrics, statistics and the grid
runner. Every type is an immutable value after construction, so instances are
safe to share between concurrent debate workers.

Invariants are checked by `debates.services.validation.validate_config`, not at
construction time, so that an invalid configuration can be reported in full.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from debates.services.utils import stable_hash


# ============================================================================
# CONSTANTS
# ============================================================================

DEFAULT_TEMPERATURE = 0.7
DEBATER_MAX_TOKENS = 256
MODERATOR_MAX_TOKENS = 1024
DEFAULT_MAX_TURNS = 3
DEFAULT_SLOTS_PER_SIDE = 3

MODERATOR_ID = 'moderator'
PROBE_AGENT_ID = 'neutral'

HYPOTHESES = ('H1', 'H2', 'H3')


# ============================================================================
# ENUMERATIONS
# ============================================================================

class SizeClass(str, Enum):
    """Model parameter size class, the proxy for agent intelligence."""
    LARGE = 'Large'
    SMALL = 'Small'


class Side(str, Enum):
    PROPONENT = 'Proponent'
    OPPONENT = 'Opponent'

    @property
    def other(self) -> 'Side':
        return Side.OPPONENT if self is Side.PROPONENT else Side.PROPONENT

    @property
    def prefix(self) -> str:
        return 'pro' if self is Side.PROPONENT else 'opp'


class ProviderKind(str, Enum):
    OPENAI_COMPATIBLE = 'openai-compatible'
    ANTHROPIC_COMPATIBLE = 'anthropic-compatible'
    SCRIPTED = 'scripted'


class Framing(str, Enum):
    ORIGINAL = 'original'
    REVERSED = 'reversed'


class ExpectedConformity(str, Enum):
    PROPONENT = 'Proponent'
    OPPONENT = 'Opponent'
    UNDETERMINED = 'Undetermined'


class IntelligenceRelation(str, Enum):
    SUPERIOR = 'Superior'
    INFERIOR = 'Inferior'
    EQUIVALENT = 'Equivalent'


class Experiment(str, Enum):
    A = 'A'
    B = 'B'


# ============================================================================
# TOPICS, MODELS, SCENARIOS
# ============================================================================

@dataclass(frozen=True)
class Topic:
    id: str
    title: str
    proponent_statement: str
    reframed_opponent_statement: Optional[str] = None
    category: str = ''

    def statement_for(self, framing: Framing) -> str:
        """The text substituted for {topic}; reversed framing debates the reframed statement."""
        if Framing(framing) is Framing.REVERSED:
            return self.reframed_opponent_statement or ''
        return self.proponent_statement

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'title': self.title,
            'proponent_statement': self.proponent_statement,
            'reframed_opponent_statement': self.reframed_opponent_statement,
            'category': self.category,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Topic':
        return cls(
            id=data['id'],
            title=data.get('title') or data['id'],
            proponent_statement=data['proponent_statement'],
            reframed_opponent_statement=data.get('reframed_opponent_statement'),
            category=data.get('category') or '',
        )


@dataclass(frozen=True)
class ModelSpec:
    provider_kind: ProviderKind
    model_id: str
    size_class: SizeClass
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEBATER_MAX_TOKENS
    base_url: Optional[str] = None
    api_key_env: Optional[str] = None
    script: Optional[str] = None

    def with_max_tokens(self, max_tokens: int) -> 'ModelSpec':
        return replace(self, max_tokens=max_tokens)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'provider_kind': ProviderKind(self.provider_kind).value,
            'model_id': self.model_id,
            'size_class': SizeClass(self.size_class).value,
            'temperature': self.temperature,
            'max_tokens': self.max_tokens,
            'base_url': self.base_url,
            'api_key_env': self.api_key_env,
            'script': self.script,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], default_max_tokens: int = DEBATER_MAX_TOKENS) -> 'ModelSpec':
        return cls(
            provider_kind=ProviderKind(data['provider_kind']),
            model_id=data['model_id'],
            size_class=SizeClass(data['size_class']),
            temperature=float(data.get('temperature', DEFAULT_TEMPERATURE)),
            max_tokens=int(data.get('max_tokens') or default_max_tokens),
            base_url=data.get('base_url'),
            api_key_env=data.get('api_key_env'),
            script=data.get('script'),
        )


@dataclass(frozen=True)
class ProviderPairing:
    """A model family row: which model plays the Large tier and which the Small tier."""
    id: str
    large: ModelSpec
    small: ModelSpec

    def model_for(self, size_class: SizeClass) -> ModelSpec:
        return self.large if SizeClass(size_class) is SizeClass.LARGE else self.small

    @property
    def is_homogeneous(self) -> bool:
        return self.large == self.small

    @classmethod
    def homogeneous(cls, spec: ModelSpec, pairing_id: Optional[str] = None) -> 'ProviderPairing':
        return cls(id=pairing_id or spec.model_id, large=spec, small=spec)

    def to_dict(self) -> Dict[str, Any]:
        return {'id': self.id, 'large': self.large.to_dict(), 'small': self.small.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ProviderPairing':
        return cls(
            id=data['id'],
            large=ModelSpec.from_dict(data['large']),
            small=ModelSpec.from_dict(data['small']),
        )


@dataclass(frozen=True)
class Scenario:
    id: str
    proponent_count: int
    proponent_size: SizeClass
    opponent_count: int
    opponent_size: SizeClass
    expected_conformity: ExpectedConformity = ExpectedConformity.UNDETERMINED
    related_hypotheses: Tuple[str, ...] = ()

    @property
    def majority_ratio(self) -> Fraction:
        """Proponent-to-opponent head-count ratio (2, 1, 0.5, 8, 1/8, ...)."""
        return Fraction(self.proponent_count, self.opponent_count)

    @property
    def majority_side(self) -> Optional[Side]:
        if self.proponent_count > self.opponent_count:
            return Side.PROPONENT
        if self.opponent_count > self.proponent_count:
            return Side.OPPONENT
        return None

    @property
    def head_count_ratio(self) -> int:
        """Majority-to-minority ratio irrespective of direction (1 when balanced)."""
        big = max(self.proponent_count, self.opponent_count)
        small = min(self.proponent_count, self.opponent_count)
        return big // small

    @property
    def intelligence_relation(self) -> IntelligenceRelation:
        pro = SizeClass(self.proponent_size)
        opp = SizeClass(self.opponent_size)
        if pro is SizeClass.LARGE and opp is SizeClass.SMALL:
            return IntelligenceRelation.SUPERIOR
        if pro is SizeClass.SMALL and opp is SizeClass.LARGE:
            return IntelligenceRelation.INFERIOR
        return IntelligenceRelation.EQUIVALENT

    def count_for(self, side: Side) -> int:
        return self.proponent_count if Side(side) is Side.PROPONENT else self.opponent_count

    def size_for(self, side: Side) -> SizeClass:
        return self.proponent_size if Side(side) is Side.PROPONENT else self.opponent_size

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'proponent_count': self.proponent_count,
            'proponent_size': SizeClass(self.proponent_size).value,
            'opponent_count': self.opponent_count,
            'opponent_size': SizeClass(self.opponent_size).value,
            'expected_conformity': ExpectedConformity(self.expected_conformity).value,
            'related_hypotheses': list(self.related_hypotheses),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Scenario':
        return cls(
            id=str(data['id']),
            proponent_count=int(data['proponent_count']),
            proponent_size=SizeClass(data['proponent_size']),
            opponent_count=int(data['opponent_count']),
            opponent_size=SizeClass(data['opponent_size']),
            expected_conformity=ExpectedConformity(data.get('expected_conformity', 'Undetermined')),
            related_hypotheses=tuple(data.get('related_hypotheses') or ()),
        )


# ============================================================================
# DEBATE CONFIGURATION
# ============================================================================

@dataclass(frozen=True)
class Debater:
    agent_id: str
    side: Side
    model: ModelSpec


@dataclass(frozen=True)
class DebateConfig:
    experiment: Experiment
    scenario: Scenario
    topic: Topic
    framing: Framing
    pairing: ProviderPairing
    neutral_model: ModelSpec
    rep_index: int
    seed: int
    max_turns: int = DEFAULT_MAX_TURNS
    slots_per_side_per_turn: int = DEFAULT_SLOTS_PER_SIDE

    @property
    def identity(self) -> Tuple[str, str, str, str, str, int]:
        return (
            Experiment(self.experiment).value,
            self.scenario.id,
            self.topic.id,
            Framing(self.framing).value,
            self.pairing.id,
            int(self.rep_index),
        )

    @property
    def run_id(self) -> str:
        return stable_hash(list(self.identity))

    @property
    def config_hash(self) -> str:
        return stable_hash(self.to_dict())

    @property
    def topic_statement(self) -> str:
        return self.topic.statement_for(self.framing)

    def roster(self) -> Tuple[Debater, ...]:
        """Debaters in id order: pro_1..pro_n then opp_1..opp_m."""
        debaters: List[Debater] = []
        for side in (Side.PROPONENT, Side.OPPONENT):
            model = self.pairing.model_for(self.scenario.size_for(side))
            for index in range(1, self.scenario.count_for(side) + 1):
                debaters.append(Debater(f'{side.prefix}_{index}', side, model))
        return tuple(debaters)

    def side_of(self, agent_id: str) -> Optional[Side]:
        for debater in self.roster():
            if debater.agent_id == agent_id:
                return debater.side
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'experiment': Experiment(self.experiment).value,
            'scenario': self.scenario.to_dict(),
            'topic': self.topic.to_dict(),
            'framing': Framing(self.framing).value,
            'pairing': self.pairing.to_dict(),
            'neutral_model': self.neutral_model.to_dict(),
            'rep_index': self.rep_index,
            'seed': self.seed,
            'max_turns': self.max_turns,
            'slots_per_side_per_turn': self.slots_per_side_per_turn,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DebateConfig':
        return cls(
            experiment=Experiment(data['experiment']),
            scenario=Scenario.from_dict(data['scenario']),
            topic=Topic.from_dict(data['topic']),
            framing=Framing(data['framing']),
            pairing=ProviderPairing.from_dict(data['pairing']),
            neutral_model=ModelSpec.from_dict(data['neutral_model'], default_max_tokens=MODERATOR_MAX_TOKENS),
            rep_index=int(data['rep_index']),
            seed=int(data['seed']),
            max_turns=int(data.get('max_turns', DEFAULT_MAX_TURNS)),
            slots_per_side_per_turn=int(data.get('slots_per_side_per_turn', DEFAULT_SLOTS_PER_SIDE)),
        )


# ============================================================================
# TRANSCRIPTS
# ============================================================================

@dataclass(frozen=True)
class Verdict:
    selected_agent_id: str
    selected_side: Side
    rationale: str


@dataclass(frozen=True)
class Utterance:
    agent_id: str
    side: Side
    model_id: str
    text: str
    slot: int


@dataclass(frozen=True)
class TurnRecord:
    index: int
    utterances: Tuple[Utterance, ...]
    verdict: Verdict

    def count_for(self, side: Side) -> int:
        return sum(1 for utterance in self.utterances if utterance.side is Side(side))


@dataclass(frozen=True)
class EarlyTermination:
    turn_index: int
    conceding_agent_id: str


@dataclass(frozen=True)
class Outcome:
    proponent_supported_turns: int
    total_evaluated_turns: int

    @classmethod
    def from_turns(cls, turns: Tuple[TurnRecord, ...]) -> 'Outcome':
        supported = sum(1 for turn in turns if turn.verdict.selected_side is Side.PROPONENT)
        return cls(proponent_supported_turns=supported, total_evaluated_turns=len(turns))


@dataclass(frozen=True)
class DebateTranscript:
    config: DebateConfig
    turns: Tuple[TurnRecord, ...]
    early_termination: Optional[EarlyTermination] = None
    started_at: Optional[str] = None
    finished_at: Optional[str] = None
    model_versions: Dict[str, str] = field(default_factory=dict)
    token_usage: Dict[str, int] = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        return self.config.run_id

    @property
    def outcome(self) -> Outcome:
        # Recounted on every access; never stored independently of the verdicts
        return Outcome.from_turns(self.turns)

    @property
    def verdict_sides(self) -> Tuple[Side, ...]:
        return tuple(turn.verdict.selected_side for turn in self.turns)

    @property
    def conformity_rate(self) -> float:
        outcome = self.outcome
        if outcome.total_evaluated_turns == 0:
            return float('nan')
        return outcome.proponent_supported_turns / outcome.total_evaluated_turns

    @property
    def fully_proponent(self) -> bool:
        return bool(self.turns) and all(side is Side.PROPONENT for side in self.verdict_sides)

    def invariant_violations(self) -> List[str]:
        """Turn-count, verdict-side and slot-conservation checks; empty when the transcript is sound."""
        problems: List[str] = []
        max_turns = self.config.max_turns
        if not 1 <= len(self.turns) <= max_turns:
            problems.append(f'turn count {len(self.turns)} outside 1..{max_turns}')
        if self.early_termination is None and len(self.turns) != max_turns:
            problems.append(f'{len(self.turns)} turns without early termination')

        sides = {debater.agent_id: debater.side for debater in self.config.roster()}
        slots = self.config.slots_per_side_per_turn
        for turn in self.turns:
            verdict = turn.verdict
            if sides.get(verdict.selected_agent_id) is not verdict.selected_side:
                problems.append(f'turn {turn.index}: verdict side inconsistent with {verdict.selected_agent_id}')
            partial = (self.early_termination is not None
                       and turn.index == self.early_termination.turn_index)
            if not partial:
                for side in Side:
                    if turn.count_for(side) != slots:
                        problems.append(f'turn {turn.index}: {side.value} spoke {turn.count_for(side)} times, expected {slots}')
        return problems
