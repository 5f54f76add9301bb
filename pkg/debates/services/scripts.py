"""
SCRIPTED PROVIDER SCRIPTS
=========================

Two script kinds drive the scripted backend:

- "table": literal lines keyed "agent:turn:slot". Lookup order is the exact key,
  "agent:turn:*", "agent:*:*", the agent's filler line, then `default_filler`.
  Moderator re-asks use the attempt number as slot; probe trials use the trial
  number as turn.
- "verdict_policy": the moderator picks the first proponent with probability
  `p_proponent` (overridable per topic, then per scenario), deterministic in
  (debate seed, turn). Debaters reply with a fixed line, the probe with
  `probe_answer`.

Both are pure functions of (script, request tag).
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

import numpy as np

from debates.domain import MODERATOR_ID, PROBE_AGENT_ID, Side
from debates.exceptions import ConfigurationError, ScriptError
from debates.services.backends import ChatRequest, RequestTag
from debates.services.prompts import MARKER_PREFIX


class Script(ABC):
    @abstractmethod
    def reply(self, request: ChatRequest) -> str:
        ...


@dataclass(frozen=True)
class ScriptTable(Script):
    lines: Mapping[str, str] = field(default_factory=dict)
    filler: Mapping[str, str] = field(default_factory=dict)
    default_filler: Optional[str] = None

    def line_for(self, tag: RequestTag) -> str:
        agent, turn, slot = tag.agent_id, tag.turn, tag.slot
        for key in (f'{agent}:{turn}:{slot}', f'{agent}:{turn}:*', f'{agent}:*:*'):
            if key in self.lines:
                return self.lines[key]
        if agent in self.filler:
            return self.filler[agent]
        if self.default_filler is not None:
            return self.default_filler
        raise ScriptError(tag.key)

    def reply(self, request: ChatRequest) -> str:
        return self.line_for(request.tag)


@dataclass(frozen=True)
class VerdictPolicyScript(Script):
    p_proponent: float = 0.5
    by_topic: Mapping[str, float] = field(default_factory=dict)
    by_scenario: Mapping[str, float] = field(default_factory=dict)
    debater_line: str = 'I maintain my position and invite the other side to address my main point.'
    probe_answer: str = 'No response'

    def probability_for(self, tag: RequestTag) -> float:
        if tag.topic_id in self.by_topic:
            return self.by_topic[tag.topic_id]
        if tag.scenario_id in self.by_scenario:
            return self.by_scenario[tag.scenario_id]
        return self.p_proponent

    def choose_side(self, tag: RequestTag) -> Side:
        rng = np.random.default_rng([tag.seed, tag.turn])
        return Side.PROPONENT if rng.random() < self.probability_for(tag) else Side.OPPONENT

    def reply(self, request: ChatRequest) -> str:
        tag = request.tag
        if tag.agent_id == PROBE_AGENT_ID:
            return f'Both sides raise fair points.\nSIDE: {self.probe_answer}'
        if tag.agent_id != MODERATOR_ID:
            return self.debater_line
        side = self.choose_side(tag)
        candidates = [agent_id for agent_id, side_value in tag.roster if side_value == side.value]
        if not candidates:
            raise ScriptError(tag.key, f'Roster has no {side.value} agent for key {tag.key}')
        return (f'Summary of turn {tag.turn}: both sides restated their positions. '
                f'The {side.value.lower()} case was more persuasive this turn.\n'
                f'{MARKER_PREFIX} {candidates[0]}')


def load_script(name: str, data: Mapping[str, Any]) -> Script:
    kind = data.get('kind', 'table')
    if kind == 'table':
        return ScriptTable(
            lines=dict(data.get('lines') or {}),
            filler=dict(data.get('filler') or {}),
            default_filler=data.get('default_filler'),
        )
    if kind == 'verdict_policy':
        return VerdictPolicyScript(
            p_proponent=float(data.get('p_proponent', 0.5)),
            by_topic={key: float(value) for key, value in (data.get('by_topic') or {}).items()},
            by_scenario={key: float(value) for key, value in (data.get('by_scenario') or {}).items()},
            debater_line=data.get('debater_line') or VerdictPolicyScript.debater_line,
            probe_answer=data.get('probe_answer') or VerdictPolicyScript.probe_answer,
        )
    raise ConfigurationError(f"Script {name!r} has unknown kind {kind!r}")


def load_scripts(data: Mapping[str, Mapping[str, Any]]) -> Dict[str, Script]:
    return {name: load_script(name, body) for name, body in (data or {}).items()}
