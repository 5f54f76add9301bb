"""
NEUTRAL-AGENT BIAS PROBE
========================

Asks the neutral model, before any debate, which side of a topic seems more
persuasive given only the two statements (Pros = proponent statement,
Cons = reframed opponent statement).

Replies are classified by their final "SIDE: Pros|Cons|No response" line; a
reply that opens with one of the three answers is accepted as well. An
unclassifiable reply is re-asked once, then counted as unclassified and left
out of the percentages.

INPUTS:  Topic, neutral ModelSpec, number of trials, ChatBackend
OUTPUTS: BiasProbeResult
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence

import pandas as pd

from debates.domain import PROBE_AGENT_ID, ModelSpec, Topic
from debates.exceptions import ConfigValidationError
from debates.services.backends import ChatBackend, ChatRequest, RequestTag
from debates.services.prompts import (
    PROBE_MARKER_PREFIX,
    PROBE_PROMPT,
    probe_correction,
    probe_user_message,
    reask_messages,
)

logger = logging.getLogger(__name__)


class ProbeAnswer(str, Enum):
    PROS = 'pros'
    CONS = 'cons'
    NO_RESPONSE = 'no_response'


_PROBE_MARKER = re.compile(
    re.escape(PROBE_MARKER_PREFIX.rstrip(':')) + r'[\s*_]*:[\s*_"\']*(pros|cons|no[\s_-]*response)',
    re.IGNORECASE,
)
_LEADING = re.compile(r'^[\s*_"\'\[(]*(no[\s_-]*response|pros|cons)\b', re.IGNORECASE)


@dataclass(frozen=True)
class BiasProbeResult:
    topic_id: str
    pros: int = 0
    cons: int = 0
    no_response: int = 0
    unclassified: int = 0

    @property
    def trials(self) -> int:
        return self.pros + self.cons + self.no_response + self.unclassified

    @property
    def classified(self) -> int:
        return self.pros + self.cons + self.no_response

    def percentages(self) -> Optional[Dict[str, float]]:
        if self.classified == 0:
            return None
        return {
            'pros': 100.0 * self.pros / self.classified,
            'cons': 100.0 * self.cons / self.classified,
            'no_response': 100.0 * self.no_response / self.classified,
        }


def _answer(token: str) -> ProbeAnswer:
    token = re.sub(r'[\s_-]+', ' ', token.lower())
    if token.startswith('no'):
        return ProbeAnswer.NO_RESPONSE
    return ProbeAnswer.PROS if token == 'pros' else ProbeAnswer.CONS


def classify_probe_reply(text: str) -> Optional[ProbeAnswer]:
    """Marker line first, then a reply that opens with the answer; None when neither applies."""
    markers = _PROBE_MARKER.findall(text or '')
    if markers:
        return _answer(markers[-1])
    match = _LEADING.match(text or '')
    if match:
        return _answer(match.group(1))
    return None


def bias_probe(topic: Topic, neutral_model: ModelSpec, n: int, backend: ChatBackend) -> BiasProbeResult:
    """
    INPUTS:
        topic: Topic - needs both a proponent and a reframed opponent statement
        neutral_model: ModelSpec - the moderator model being probed
        n: int - number of trials (> 0)
        backend: ChatBackend

    OUTPUTS:
        BiasProbeResult whose four counts sum to n
    """
    if n <= 0:
        raise ConfigValidationError([('n', 'trials must be positive')])
    if not topic.reframed_opponent_statement:
        raise ConfigValidationError([(
            'topic.reframed_opponent_statement',
            f"topic '{topic.id}' needs a reframed statement to serve as the Cons text",
        )])

    counts = {answer: 0 for answer in ProbeAnswer}
    unclassified = 0
    first_message = probe_user_message(topic)
    logger.debug("[INPUT DATA] probe topic=%s model=%s trials=%d", topic.id, neutral_model.model_id, n)

    for trial in range(1, n + 1):
        failed: List[str] = []
        answer: Optional[ProbeAnswer] = None
        for attempt in (1, 2):
            request = ChatRequest(
                system_prompt=PROBE_PROMPT,
                messages=tuple(reask_messages(first_message, failed, probe_correction())),
                temperature=neutral_model.temperature,
                max_tokens=neutral_model.max_tokens,
                tag=RequestTag(agent_id=PROBE_AGENT_ID, turn=trial, slot=attempt, attempt=attempt,
                               seed=trial, topic_id=topic.id),
            )
            reply = backend.complete(neutral_model, request).text
            answer = classify_probe_reply(reply)
            if answer is not None:
                break
            failed.append(reply)
        if answer is None:
            unclassified += 1
            logger.warning("Probe %s trial %d: reply unclassifiable after one re-ask", topic.id, trial)
        else:
            counts[answer] += 1

    result = BiasProbeResult(
        topic_id=topic.id,
        pros=counts[ProbeAnswer.PROS],
        cons=counts[ProbeAnswer.CONS],
        no_response=counts[ProbeAnswer.NO_RESPONSE],
        unclassified=unclassified,
    )
    if unclassified:
        logger.warning("Probe %s: %d of %d replies excluded from percentages", topic.id, unclassified, n)
    logger.debug("[OUTPUT RESULTS] %s", result)
    return result


def probe_table(results: Sequence[BiasProbeResult], titles: Optional[Dict[str, str]] = None) -> pd.DataFrame:
    """Per-topic percentages (Pros / Cons / No response) with unclassified counts alongside."""
    titles = titles or {}
    rows = []
    for result in results:
        shares = result.percentages() or {'pros': float('nan'), 'cons': float('nan'), 'no_response': float('nan')}
        rows.append({
            'Topic (%)': titles.get(result.topic_id, result.topic_id),
            'Pros': round(shares['pros'], 2),
            'Cons': round(shares['cons'], 2),
            'No response': round(shares['no_response'], 2),
            'Trials': result.trials,
            'Unclassified': result.unclassified,
        })
    return pd.DataFrame(rows, columns=['Topic (%)', 'Pros', 'Cons', 'No response', 'Trials', 'Unclassified'])
