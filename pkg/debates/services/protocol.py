"""
DEBATE PROTOCOL ENGINE
======================

Runs one debate as a sequential state machine over a ChatBackend.

Flow per turn:
1. Every scheduled slot speaks in order; each debater sees its role prompt and
   the full conversation so far.
2. A "complete agreement" reply finishes its slot and ends the speaking.
3. The moderator is asked once for a verdict over the whole transcript so far
   (up to 2 structured re-asks when the verdict cannot be parsed).
4. After a concession the debate stops with early_termination set.

INPUTS:  DebateConfig (validated), ChatBackend
OUTPUTS: DebateTranscript, or DebateFailedError naming the failing stage and turn
"""

import logging
import re
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from debates.domain import (
    MODERATOR_ID,
    DebateConfig,
    DebateTranscript,
    Debater,
    EarlyTermination,
    ModelSpec,
    Side,
    TurnRecord,
    Utterance,
    Verdict,
)
from debates.exceptions import BackendError, DebateFailedError, ScriptError, VerdictParseError
from debates.services.backends import ChatBackend, ChatRequest, Completion, RequestTag
from debates.services.prompts import (
    MARKER_PREFIX,
    debater_messages,
    debater_system_prompt,
    moderator_correction,
    moderator_system_prompt,
    moderator_user_message,
    reask_messages,
)
from debates.services.scheduling import randomize_speaking_order

logger = logging.getLogger(__name__)


COMPLETE_AGREEMENT = 'complete agreement'
MAX_VERDICT_REASKS = 2

_TERMINAL_CHARS = ' \t\r\n.!?;:,"\'*'
_SENTENCE_END = re.compile(r'[.!?;\n]')
_MARKER_LINE = re.compile(
    r'(?<![A-Za-z0-9_])' + re.escape(MARKER_PREFIX.rstrip(':')) + r'[\s*_]*:[\s*_\[]*([A-Za-z]+_\d+)',
    re.IGNORECASE,
)


# ============================================================================
# TEXT PARSING
# ============================================================================

def detect_complete_agreement(text: str) -> bool:
    """
    True iff the normalized message is "complete agreement" or opens with it
    within its first sentence.

    Normalization trims whitespace, quotes and terminal punctuation and lowercases.
    """
    canonical = (text or '').strip(_TERMINAL_CHARS).lower()
    if canonical == COMPLETE_AGREEMENT:
        return True
    first_sentence = _SENTENCE_END.split(canonical, maxsplit=1)[0].strip(_TERMINAL_CHARS)
    return first_sentence.startswith(COMPLETE_AGREEMENT)


def _roster_sides(roster: Sequence[Debater]) -> Dict[str, Side]:
    return {debater.agent_id: debater.side for debater in roster}


def parse_moderator_verdict(text: str, roster: Sequence[Debater]) -> Verdict:
    """
    Read the moderator's pick.

    Primary path: the last "MOST_PERSUASIVE: <agent_id>" line naming a roster id.
    Fallback: exactly one distinct roster id mentioned in the final paragraph.
    Raises VerdictParseError when neither yields a single debater.
    """
    sides = _roster_sides(roster)
    if not sides:
        raise VerdictParseError('roster is empty')
    text = text or ''

    markers = [match.lower() for match in _MARKER_LINE.findall(text)]
    if markers and markers[-1] in sides:
        agent_id = markers[-1]
        return Verdict(selected_agent_id=agent_id, selected_side=sides[agent_id], rationale=text)

    paragraphs = [block for block in re.split(r'\n\s*\n', text.strip()) if block.strip()]
    last_paragraph = paragraphs[-1] if paragraphs else ''
    mentioned = {
        agent_id for agent_id in sides
        if re.search(r'(?<![A-Za-z0-9_])' + re.escape(agent_id) + r'(?![A-Za-z0-9_])', last_paragraph, re.IGNORECASE)
    }
    if len(mentioned) == 1:
        agent_id = mentioned.pop()
        return Verdict(selected_agent_id=agent_id, selected_side=sides[agent_id], rationale=text)
    if not mentioned:
        raise VerdictParseError('no debater id found in moderator reply')
    raise VerdictParseError(f"ambiguous moderator reply mentions {', '.join(sorted(mentioned))}")


# ============================================================================
# DEBATE EXECUTION
# ============================================================================

def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def _tag(config: DebateConfig, agent_id: str, turn: int, slot: int, attempt: int = 1) -> RequestTag:
    return RequestTag(
        run_id=config.run_id,
        agent_id=agent_id,
        turn=turn,
        slot=slot,
        attempt=attempt,
        seed=config.seed,
        scenario_id=config.scenario.id,
        topic_id=config.topic.id,
        roster=tuple((debater.agent_id, debater.side.value) for debater in config.roster()),
    )


class _DebateRun:
    """Mutable state of one debate in flight; never shared between debates."""

    def __init__(self, config: DebateConfig, backend: ChatBackend):
        self.config = config
        self.backend = backend
        self.roster = config.roster()
        self.debaters = {debater.agent_id: debater for debater in self.roster}
        self.history: List[Tuple[int, Utterance]] = []
        self.model_versions: Dict[str, str] = {}
        self.token_usage: Dict[str, int] = {}

    def call(self, spec: ModelSpec, request: ChatRequest, stage: str, turn_index: int) -> Completion:
        try:
            completion = self.backend.complete(spec, request)
        except BackendError as exc:
            raise DebateFailedError(self.config.run_id, stage, turn_index, str(exc), exc.attempt_log) from exc
        except ScriptError as exc:
            raise DebateFailedError(self.config.run_id, stage, turn_index, str(exc)) from exc

        self.model_versions[request.tag.agent_id] = completion.model
        for key, value in (('input_tokens', completion.input_tokens), ('output_tokens', completion.output_tokens)):
            if value is not None:
                self.token_usage[key] = self.token_usage.get(key, 0) + int(value)
        return completion

    def speak(self, agent_id: str, turn_index: int, slot: int) -> Utterance:
        debater = self.debaters[agent_id]
        statement = self.config.topic_statement
        request = ChatRequest(
            system_prompt=debater_system_prompt(debater.side, statement),
            messages=tuple(debater_messages(debater, statement, self.history, turn_index, slot)),
            temperature=debater.model.temperature,
            max_tokens=debater.model.max_tokens,
            tag=_tag(self.config, agent_id, turn_index, slot),
        )
        completion = self.call(debater.model, request, 'debater', turn_index)
        utterance = Utterance(
            agent_id=agent_id,
            side=debater.side,
            model_id=debater.model.model_id,
            text=completion.text.strip(),
            slot=slot,
        )
        self.history.append((turn_index, utterance))
        return utterance

    def moderate(self, turn_index: int) -> Verdict:
        neutral = self.config.neutral_model
        first_message = moderator_user_message(self.config, self.history, turn_index)
        failed: List[str] = []
        for attempt in range(1, MAX_VERDICT_REASKS + 2):
            request = ChatRequest(
                system_prompt=moderator_system_prompt(self.config),
                messages=tuple(reask_messages(first_message, failed, moderator_correction(self.config))),
                temperature=neutral.temperature,
                max_tokens=neutral.max_tokens,
                tag=_tag(self.config, MODERATOR_ID, turn_index, attempt, attempt),
            )
            completion = self.call(neutral, request, 'moderator', turn_index)
            try:
                return parse_moderator_verdict(completion.text, self.roster)
            except VerdictParseError as exc:
                logger.warning("Run %s turn %d: unparseable verdict on attempt %d (%s)",
                               self.config.run_id, turn_index, attempt, exc)
                failed.append(completion.text)

        raise DebateFailedError(
            self.config.run_id,
            'verdict',
            turn_index,
            f'unparseable verdict after {MAX_VERDICT_REASKS} re-asks',
            [{'attempt': number, 'reply': reply[:500]} for number, reply in enumerate(failed, start=1)],
        )


def run_debate(config: DebateConfig, backend: ChatBackend,
               clock: Optional[Callable[[], datetime]] = None) -> DebateTranscript:
    """
    Execute one debate end to end.

    INPUTS:
        config: DebateConfig - validated configuration (seed included)
        backend: ChatBackend - serves every debater and the moderator
        clock: Optional[Callable] - timestamp source; inject a fixed clock for
            byte-identical replays

    OUTPUTS:
        DebateTranscript with 1..max_turns turns, one verdict per turn
    """
    clock = clock or _utc_now
    started_at = clock().isoformat()
    run = _DebateRun(config, backend)
    by_side = {side: [d.agent_id for d in run.roster if d.side is side] for side in Side}
    schedule = randomize_speaking_order(by_side, config.seed, config.max_turns, config.slots_per_side_per_turn)

    logger.debug("[INPUT DATA] run %s scenario=%s topic=%s framing=%s pairing=%s rep=%d first=%s",
                 config.run_id, config.scenario.id, config.topic.id, config.framing.value,
                 config.pairing.id, config.rep_index, schedule.first_side.value)

    turns: List[TurnRecord] = []
    early_termination: Optional[EarlyTermination] = None
    for turn_index in range(1, config.max_turns + 1):
        utterances: List[Utterance] = []
        for slot in schedule.turn(turn_index):
            utterance = run.speak(slot.agent_id, turn_index, slot.slot)
            utterances.append(utterance)
            if detect_complete_agreement(utterance.text):
                early_termination = EarlyTermination(turn_index=turn_index, conceding_agent_id=slot.agent_id)
                logger.info("Run %s: %s declared complete agreement in turn %d",
                            config.run_id, slot.agent_id, turn_index)
                break

        verdict = run.moderate(turn_index)
        turns.append(TurnRecord(index=turn_index, utterances=tuple(utterances), verdict=verdict))
        logger.debug("[PROCESSING] run %s turn %d verdict %s (%s)",
                     config.run_id, turn_index, verdict.selected_agent_id, verdict.selected_side.value)
        if early_termination is not None:
            break

    transcript = DebateTranscript(
        config=config,
        turns=tuple(turns),
        early_termination=early_termination,
        started_at=started_at,
        finished_at=clock().isoformat(),
        model_versions=dict(sorted(run.model_versions.items())),
        token_usage=dict(run.token_usage),
    )
    outcome = transcript.outcome
    logger.debug("[OUTPUT RESULTS] run %s: %d/%d turns to proponent",
                 config.run_id, outcome.proponent_supported_turns, outcome.total_evaluated_turns)
    return transcript
