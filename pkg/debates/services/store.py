"""
TRANSCRIPT STORE
================

File layout inside an output directory:

    transcripts.jsonl  one debate per line, the source of truth
    summary.csv        one row per debate, regenerable from transcripts
    failures.jsonl     one failed debate per line {run_id, stage, turn_index, error, attempts}

Files are append-only; an interrupted run leaves every earlier line intact.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Union

import pandas as pd

from debates.domain import (
    DebateConfig,
    DebateTranscript,
    EarlyTermination,
    Side,
    TurnRecord,
    Utterance,
    Verdict,
)
from debates.exceptions import DebateFailedError, StoreError, StoreIntegrityError

logger = logging.getLogger(__name__)


TRANSCRIPTS_FILE = 'transcripts.jsonl'
SUMMARY_FILE = 'summary.csv'
FAILURES_FILE = 'failures.jsonl'

SUMMARY_COLUMNS = [
    'run_id', 'experiment', 'scenario_id', 'topic_id', 'pairing', 'rep',
    'framing', 'cr', 'fully_pro', 'total_turns', 'early_term',
]


# ============================================================================
# RECORD CONVERSION
# ============================================================================

def transcript_to_record(transcript: DebateTranscript) -> Dict[str, Any]:
    config = transcript.config
    outcome = transcript.outcome
    early = transcript.early_termination
    return {
        'run_id': config.run_id,
        'experiment': config.experiment.value,
        'scenario_id': config.scenario.id,
        'topic_id': config.topic.id,
        'framing': config.framing.value,
        'pairing': config.pairing.id,
        'rep': config.rep_index,
        'seed': config.seed,
        'config_hash': config.config_hash,
        'config': config.to_dict(),
        'turns': [
            {
                'index': turn.index,
                'utterances': [
                    {
                        'agent_id': utterance.agent_id,
                        'side': utterance.side.value,
                        'model_id': utterance.model_id,
                        'slot': utterance.slot,
                        'text': utterance.text,
                    }
                    for utterance in turn.utterances
                ],
                'verdict': {
                    'selected_agent_id': turn.verdict.selected_agent_id,
                    'selected_side': turn.verdict.selected_side.value,
                    'rationale': turn.verdict.rationale,
                },
            }
            for turn in transcript.turns
        ],
        'early_termination': None if early is None else {
            'turn_index': early.turn_index,
            'conceding_agent_id': early.conceding_agent_id,
        },
        'outcome': {
            'pro_turns': outcome.proponent_supported_turns,
            'total_turns': outcome.total_evaluated_turns,
        },
        'timestamps': {
            'started_at': transcript.started_at,
            'finished_at': transcript.finished_at,
        },
        'model_versions': dict(transcript.model_versions),
        'token_usage': dict(transcript.token_usage),
    }


def transcript_from_record(record: Dict[str, Any]) -> DebateTranscript:
    """Rebuild a transcript; the stored outcome must match a recount of the verdicts."""
    config = DebateConfig.from_dict(record['config'])
    if config.run_id != record['run_id']:
        raise StoreIntegrityError(f"run {record['run_id']}: stored config hashes to run id {config.run_id}")

    turns = tuple(
        TurnRecord(
            index=int(turn['index']),
            utterances=tuple(
                Utterance(
                    agent_id=item['agent_id'],
                    side=Side(item['side']),
                    model_id=item['model_id'],
                    text=item['text'],
                    slot=int(item['slot']),
                )
                for item in turn['utterances']
            ),
            verdict=Verdict(
                selected_agent_id=turn['verdict']['selected_agent_id'],
                selected_side=Side(turn['verdict']['selected_side']),
                rationale=turn['verdict']['rationale'],
            ),
        )
        for turn in record['turns']
    )
    early = record.get('early_termination')
    timestamps = record.get('timestamps') or {}
    transcript = DebateTranscript(
        config=config,
        turns=turns,
        early_termination=None if not early else EarlyTermination(
            turn_index=int(early['turn_index']),
            conceding_agent_id=early['conceding_agent_id'],
        ),
        started_at=timestamps.get('started_at'),
        finished_at=timestamps.get('finished_at'),
        model_versions=dict(record.get('model_versions') or {}),
        token_usage=dict(record.get('token_usage') or {}),
    )

    stored = record.get('outcome') or {}
    outcome = transcript.outcome
    if (stored.get('pro_turns'), stored.get('total_turns')) != (
            outcome.proponent_supported_turns, outcome.total_evaluated_turns):
        raise StoreIntegrityError(f"run {record['run_id']}: stored outcome {stored} disagrees with verdict recount")
    return transcript


def summary_row(transcript: DebateTranscript) -> Dict[str, Any]:
    config = transcript.config
    outcome = transcript.outcome
    return {
        'run_id': config.run_id,
        'experiment': config.experiment.value,
        'scenario_id': config.scenario.id,
        'topic_id': config.topic.id,
        'pairing': config.pairing.id,
        'rep': config.rep_index,
        'framing': config.framing.value,
        'cr': transcript.conformity_rate,
        'fully_pro': int(transcript.fully_proponent),
        'total_turns': outcome.total_evaluated_turns,
        'early_term': int(transcript.early_termination is not None),
    }


def summary_frame(transcripts: List[DebateTranscript]) -> pd.DataFrame:
    return pd.DataFrame([summary_row(t) for t in transcripts], columns=SUMMARY_COLUMNS)


# ============================================================================
# STORE
# ============================================================================

class TranscriptStore:
    """Append-only store; safe for one writer thread (the runner's main thread)."""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.transcripts_path = self.output_dir / TRANSCRIPTS_FILE
        self.summary_path = self.output_dir / SUMMARY_FILE
        self.failures_path = self.output_dir / FAILURES_FILE
        self._lock = threading.Lock()

    def ensure_writable(self) -> None:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            probe = self.output_dir / '.write_probe'
            probe.write_text('', encoding='utf-8')
            probe.unlink()
        except OSError as exc:
            raise StoreError(f'Output directory {self.output_dir} is not writable: {exc}') from exc

    def exists(self) -> bool:
        return self.transcripts_path.exists()

    def iter_records(self) -> Iterator[Dict[str, Any]]:
        if not self.transcripts_path.exists():
            return
        with self.transcripts_path.open(encoding='utf-8') as handle:
            lines = handle.readlines()
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                if number == len(lines):
                    logger.warning("Ignoring truncated final line %d of %s", number, self.transcripts_path)
                    continue
                raise StoreIntegrityError(f'{self.transcripts_path}:{number}: {exc}') from exc

    def load_transcripts(self) -> List[DebateTranscript]:
        return [transcript_from_record(record) for record in self.iter_records()]

    def completed_hashes(self) -> Dict[str, str]:
        """run_id -> config_hash of every stored transcript."""
        done: Dict[str, str] = {}
        for record in self.iter_records():
            run_id = record['run_id']
            if run_id in done and done[run_id] != record.get('config_hash'):
                raise StoreIntegrityError(f'run {run_id} stored twice with different configs')
            done[run_id] = record.get('config_hash')
        return done

    def append(self, transcript: DebateTranscript) -> None:
        line = json.dumps(transcript_to_record(transcript), ensure_ascii=False, sort_keys=True)
        row = pd.DataFrame([summary_row(transcript)], columns=SUMMARY_COLUMNS)
        with self._lock:
            with self.transcripts_path.open('a', encoding='utf-8') as handle:
                handle.write(line + '\n')
            row.to_csv(self.summary_path, mode='a', header=not self.summary_path.exists(), index=False)

    def append_failure(self, error: DebateFailedError) -> None:
        record = {
            'run_id': error.run_id,
            'stage': error.stage,
            'turn_index': error.turn_index,
            'error': error.error,
            'attempts': error.attempts,
        }
        with self._lock:
            with self.failures_path.open('a', encoding='utf-8') as handle:
                handle.write(json.dumps(record, ensure_ascii=False, default=str) + '\n')

    def read_failures(self) -> List[Dict[str, Any]]:
        if not self.failures_path.exists():
            return []
        with self.failures_path.open(encoding='utf-8') as handle:
            return [json.loads(line) for line in handle if line.strip()]

    def read_summary(self) -> pd.DataFrame:
        if not self.summary_path.exists():
            return pd.DataFrame(columns=SUMMARY_COLUMNS)
        return pd.read_csv(self.summary_path, dtype={'run_id': str, 'scenario_id': str,
                                                     'topic_id': str, 'pairing': str})

    def rebuild_summary(self) -> pd.DataFrame:
        """Regenerate summary.csv from transcripts.jsonl."""
        frame = summary_frame(self.load_transcripts())
        with self._lock:
            frame.to_csv(self.summary_path, index=False)
        logger.info("Rebuilt %s from %d transcripts", self.summary_path, len(frame))
        return frame


def open_store(output_dir: Optional[Union[str, Path]]) -> TranscriptStore:
    if output_dir is None:
        from django.conf import settings
        output_dir = settings.CONFORMITY_OUTPUT_DIR
    return TranscriptStore(output_dir)
