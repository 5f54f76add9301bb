"""
CONFORMITY METRICS
==================

Conformity Rate (CR): the share of moderator verdicts that favour a side.
    micro  - pooled over every evaluated turn
    macro  - mean of the per-debate rates
Full Conformity Ratio (FCR): the share of debates in which every evaluated
turn favoured the side.

Debates with zero evaluated turns cannot contribute a rate; they are counted
as excluded rather than silently dropped.

INPUTS:  DebateTranscript collections
OUTPUTS: ConformitySummary, ContingencyTable2x2
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from analysis.exceptions import StatisticsInputError, UndefinedMetricError
from debates.domain import DebateTranscript, Side

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConformitySummary:
    side: Side = Side.PROPONENT
    cr_micro: Optional[float] = None
    cr_macro: Optional[float] = None
    fcr: Optional[float] = None
    proponent_supported_turns: int = 0
    total_evaluated_turns: int = 0
    fully_proponent_discussions: int = 0
    total_discussions: int = 0
    excluded_discussions: int = 0
    early_terminated_discussions: int = 0


def _usable(transcripts: Iterable[DebateTranscript]) -> Tuple[List[DebateTranscript], int]:
    transcripts = list(transcripts)
    if not transcripts:
        raise UndefinedMetricError('no transcripts to summarise')
    usable = [t for t in transcripts if t.outcome.total_evaluated_turns > 0]
    excluded = len(transcripts) - len(usable)
    if not usable:
        raise UndefinedMetricError(f'all {excluded} transcripts have zero evaluated turns')
    if excluded:
        logger.warning("Excluding %d transcripts with zero evaluated turns", excluded)
    return usable, excluded


def _supported(transcript: DebateTranscript, side: Side) -> int:
    return sum(1 for verdict_side in transcript.verdict_sides if verdict_side == side)


def conformity_rate(transcripts: Iterable[DebateTranscript], side: Side = Side.PROPONENT) -> ConformitySummary:
    """
    INPUTS:
        transcripts: iterable of DebateTranscript
        side: Side - the side whose support is measured (default Proponent)

    OUTPUTS:
        ConformitySummary with cr_micro and cr_macro in [0, 1]
    """
    usable, excluded = _usable(transcripts)
    supported = [_supported(t, side) for t in usable]
    totals = [t.outcome.total_evaluated_turns for t in usable]
    per_debate = np.array(supported, dtype=float) / np.array(totals, dtype=float)
    return ConformitySummary(
        side=side,
        cr_micro=sum(supported) / sum(totals),
        cr_macro=float(per_debate.mean()),
        proponent_supported_turns=sum(supported),
        total_evaluated_turns=sum(totals),
        total_discussions=len(usable),
        excluded_discussions=excluded,
        early_terminated_discussions=sum(1 for t in usable if t.early_termination is not None),
    )


def full_conformity_ratio(transcripts: Iterable[DebateTranscript], side: Side = Side.PROPONENT) -> ConformitySummary:
    usable, excluded = _usable(transcripts)
    fully = sum(1 for t in usable if _supported(t, side) == t.outcome.total_evaluated_turns)
    return ConformitySummary(
        side=side,
        fcr=fully / len(usable),
        fully_proponent_discussions=fully,
        total_discussions=len(usable),
        excluded_discussions=excluded,
        early_terminated_discussions=sum(1 for t in usable if t.early_termination is not None),
    )


def summarize(transcripts: Iterable[DebateTranscript], side: Side = Side.PROPONENT) -> ConformitySummary:
    """Micro CR, macro CR and FCR in one pass over the same transcript set."""
    transcripts = list(transcripts)
    rates = conformity_rate(transcripts, side)
    full = full_conformity_ratio(transcripts, side)
    return ConformitySummary(
        side=side,
        cr_micro=rates.cr_micro,
        cr_macro=rates.cr_macro,
        fcr=full.fcr,
        proponent_supported_turns=rates.proponent_supported_turns,
        total_evaluated_turns=rates.total_evaluated_turns,
        fully_proponent_discussions=full.fully_proponent_discussions,
        total_discussions=rates.total_discussions,
        excluded_discussions=rates.excluded_discussions,
        early_terminated_discussions=rates.early_terminated_discussions,
    )


# ============================================================================
# CONTINGENCY TABLES
# ============================================================================

@dataclass(frozen=True)
class ContingencyTable2x2:
    """Rows are transcript groups, columns are the verdict side (Proponent, Opponent)."""
    row_labels: Tuple[str, str]
    observed: Tuple[Tuple[int, int], Tuple[int, int]]
    column_labels: Tuple[str, str] = ('Proponent', 'Opponent')

    def __post_init__(self):
        cells = [value for row in self.observed for value in row]
        if len(self.observed) != 2 or any(len(row) != 2 for row in self.observed):
            raise StatisticsInputError('contingency table must be 2x2')
        if any(value < 0 for value in cells):
            raise StatisticsInputError('contingency counts must be non-negative')

    @classmethod
    def from_counts(cls, counts: Sequence[Sequence[int]], row_labels: Tuple[str, str] = ('group 1', 'group 2')):
        observed = tuple(tuple(int(value) for value in row) for row in counts)
        return cls(row_labels=tuple(row_labels), observed=observed)

    @property
    def row_totals(self) -> Tuple[int, int]:
        return tuple(sum(row) for row in self.observed)

    @property
    def column_totals(self) -> Tuple[int, int]:
        return tuple(self.observed[0][j] + self.observed[1][j] for j in range(2))

    @property
    def n(self) -> int:
        return sum(self.row_totals)

    @property
    def expected(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        n = self.n
        if n == 0:
            raise StatisticsInputError('contingency table is empty')
        rows, columns = self.row_totals, self.column_totals
        return tuple(tuple(rows[i] * columns[j] / n for j in range(2)) for i in range(2))

    def as_array(self) -> np.ndarray:
        return np.array(self.observed, dtype=float)


def build_contingency(group_a: Iterable[DebateTranscript], group_b: Iterable[DebateTranscript],
                      labels: Tuple[str, str] = ('group 1', 'group 2')) -> ContingencyTable2x2:
    """Counts evaluated verdicts by side for two transcript groups."""
    rows = []
    for group in (group_a, group_b):
        pro = opp = 0
        for transcript in group:
            for verdict_side in transcript.verdict_sides:
                if verdict_side == Side.PROPONENT:
                    pro += 1
                else:
                    opp += 1
        rows.append((pro, opp))
    logger.debug("[OUTPUT RESULTS] contingency %s: %s", labels, rows)
    return ContingencyTable2x2(row_labels=tuple(labels), observed=tuple(rows))
