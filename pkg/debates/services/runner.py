"""
GRID RUNNER
===========

Executes a grid of debates on a bounded worker pool and persists the results.

Worker threads only run debates; the calling thread is the single writer that
appends transcripts, summary rows and failures as debates complete.

INPUTS:  grid (List[DebateConfig]), ChatBackend, concurrency limit, TranscriptStore, resume flag
OUTPUTS: RunReport {done, failed, skipped}
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Dict, List, Optional, Sequence

from debates.domain import DebateConfig, DebateTranscript
from debates.exceptions import ConformityLabError, DebateFailedError, StoreError, StoreIntegrityError
from debates.services.backends import ChatBackend
from debates.services.protocol import run_debate
from debates.services.store import TranscriptStore
from debates.services.validation import validate_grid

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    done: int = 0
    failed: int = 0
    skipped: int = 0
    failures: List[DebateFailedError] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.done + self.failed + self.skipped


def _execute(config: DebateConfig, backend: ChatBackend,
             clock: Optional[Callable[[], datetime]]) -> DebateTranscript:
    try:
        return run_debate(config, backend, clock=clock)
    except DebateFailedError:
        raise
    except ConformityLabError as exc:
        raise DebateFailedError(config.run_id, 'debate', None, str(exc)) from exc


def pending_configs(grid: Sequence[DebateConfig], store: TranscriptStore, resume: bool) -> List[DebateConfig]:
    """Grid entries not yet stored; refuses to mix grids whose configs disagree."""
    stored: Dict[str, str] = store.completed_hashes() if store.exists() else {}
    mismatched = [c.run_id for c in grid if c.run_id in stored and stored[c.run_id] != c.config_hash]
    if mismatched:
        raise StoreIntegrityError(
            f'{len(mismatched)} run ids in {store.transcripts_path} were stored with a different config '
            f'(first: {mismatched[0]}); use a fresh output directory'
        )
    already = [c.run_id for c in grid if c.run_id in stored]
    if already and not resume:
        raise StoreError(f'{len(already)} runs of this grid are already stored in {store.output_dir}; '
                         f'pass resume to skip them')
    return [c for c in grid if c.run_id not in stored]


def run_grid(grid: Sequence[DebateConfig], backend: ChatBackend, concurrency_limit: int,
             store: TranscriptStore, resume: bool = False,
             clock: Optional[Callable[[], datetime]] = None) -> RunReport:
    """
    INPUTS:
        grid: Sequence[DebateConfig] - configs in grid order
        backend: ChatBackend - shared by all workers
        concurrency_limit: int - maximum debates in flight
        store: TranscriptStore - output location
        resume: bool - skip run ids already present in the store
        clock: Optional[Callable] - timestamp source passed to every debate

    OUTPUTS:
        RunReport with done / failed / skipped totals
    """
    if concurrency_limit < 1:
        raise ValueError('concurrency_limit must be at least 1')
    grid = validate_grid(grid)
    store.ensure_writable()
    pending = pending_configs(grid, store, resume)

    report = RunReport(skipped=len(grid) - len(pending))
    logger.info("[INPUT DATA] %d debates in grid, %d already stored, %d to run, concurrency %d",
                len(grid), report.skipped, len(pending), concurrency_limit)

    with ThreadPoolExecutor(max_workers=concurrency_limit) as executor:
        futures = {executor.submit(_execute, config, backend, clock): config for config in pending}
        for future in as_completed(futures):
            config = futures[future]
            try:
                transcript = future.result()
            except DebateFailedError as exc:
                store.append_failure(exc)
                report.failed += 1
                report.failures.append(exc)
                logger.warning("[%d/%d] FAILED %s (%s, turn %s): %s",
                               report.done + report.failed, len(pending), config.run_id,
                               exc.stage, exc.turn_index, exc.error)
                continue

            store.append(transcript)
            report.done += 1
            outcome = transcript.outcome
            logger.info("[%d/%d] done %s exp=%s scenario=%s topic=%s pairing=%s rep=%d cr=%d/%d%s",
                        report.done + report.failed, len(pending), config.run_id,
                        config.experiment.value, config.scenario.id, config.topic.id, config.pairing.id,
                        config.rep_index, outcome.proponent_supported_turns, outcome.total_evaluated_turns,
                        ' early' if transcript.early_termination else '')

    logger.info("[OUTPUT RESULTS] done=%d failed=%d skipped=%d", report.done, report.failed, report.skipped)
    return report
