import json
import tempfile
import threading
import time
from pathlib import Path

from django.test import SimpleTestCase

from debates.exceptions import ScriptError, StoreError, StoreIntegrityError
from debates.services.backends import ChatBackend, ScriptedBackend
from debates.services.grids import build_experiment_a_grid
from debates.services.runner import run_grid
from debates.services.scripts import VerdictPolicyScript
from debates.services.store import TranscriptStore
from debates.tests.factories import FixedClock, experiment_settings, make_transcript

SCRIPTS = {'policy': VerdictPolicyScript(p_proponent=0.6)}


class ConcurrencyProbe(ChatBackend):
    """Scripted backend that records the peak number of overlapping calls."""

    def __init__(self):
        self.inner = ScriptedBackend(SCRIPTS)
        self.active = 0
        self.peak = 0
        self.lock = threading.Lock()

    def complete(self, spec, request):
        with self.lock:
            self.active += 1
            self.peak = max(self.peak, self.active)
        try:
            time.sleep(0.001)
            return self.inner.complete(spec, request)
        finally:
            with self.lock:
                self.active -= 1


class FailOneRun(ChatBackend):

    def __init__(self, run_id):
        self.inner = ScriptedBackend(SCRIPTS)
        self.run_id = run_id

    def complete(self, spec, request):
        if request.tag.run_id == self.run_id:
            raise ScriptError(request.tag.key)
        return self.inner.complete(spec, request)


class StoreTestCase(SimpleTestCase):

    def setUp(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.output_dir = Path(directory.name) / 'run'
        self.store = TranscriptStore(self.output_dir)
        self.grid = build_experiment_a_grid(experiment_settings(scripts=SCRIPTS, reps=2))


class RunGridTests(StoreTestCase):

    def test_resume_skips_stored_runs(self):
        first = run_grid(self.grid[:7], ScriptedBackend(SCRIPTS), 2, self.store)
        self.assertEqual((first.done, first.failed, first.skipped), (7, 0, 0))

        second = run_grid(self.grid, ScriptedBackend(SCRIPTS), 2, self.store, resume=True)
        self.assertEqual((second.done, second.failed, second.skipped), (13, 0, 7))
        self.assertEqual(len(self.store.load_transcripts()), 20)
        self.assertEqual(len(self.store.read_summary()), 20)

    def test_rerun_without_resume_is_refused(self):
        run_grid(self.grid[:3], ScriptedBackend(SCRIPTS), 1, self.store)
        with self.assertRaises(StoreError):
            run_grid(self.grid, ScriptedBackend(SCRIPTS), 1, self.store)

    def test_changed_config_for_stored_run_id(self):
        run_grid(self.grid[:3], ScriptedBackend(SCRIPTS), 1, self.store)
        reseeded = build_experiment_a_grid(experiment_settings(scripts=SCRIPTS, reps=2), master_seed=8)
        with self.assertRaises(StoreIntegrityError):
            run_grid(reseeded, ScriptedBackend(SCRIPTS), 1, self.store, resume=True)

    def test_concurrency_limit_holds(self):
        backend = ConcurrencyProbe()
        report = run_grid(self.grid, backend, 4, self.store)
        self.assertEqual(report.done, 20)
        self.assertGreaterEqual(backend.peak, 1)
        self.assertLessEqual(backend.peak, 4)

    def test_one_failure_does_not_stop_the_grid(self):
        failing = self.grid[5].run_id
        report = run_grid(self.grid, FailOneRun(failing), 3, self.store)

        self.assertEqual((report.done, report.failed), (19, 1))
        failures = self.store.read_failures()
        self.assertEqual(len(failures), 1)
        self.assertEqual(failures[0]['run_id'], failing)
        self.assertEqual(failures[0]['stage'], 'debater')
        self.assertNotIn(failing, {t.run_id for t in self.store.load_transcripts()})

    def test_concurrency_limit_must_be_positive(self):
        with self.assertRaises(ValueError):
            run_grid(self.grid, ScriptedBackend(SCRIPTS), 0, self.store)


class TranscriptStoreTests(StoreTestCase):

    def test_round_trip(self):
        run_grid(self.grid, ScriptedBackend(SCRIPTS), 4, self.store, clock=FixedClock())
        loaded = {t.run_id: t for t in self.store.load_transcripts()}
        self.assertEqual(set(loaded), {config.run_id for config in self.grid})
        for config in self.grid:
            self.assertEqual(loaded[config.run_id].config, config)
            self.assertEqual(loaded[config.run_id].invariant_violations(), [])

    def test_stored_outcome_must_match_verdicts(self):
        self.store.ensure_writable()
        self.store.append(make_transcript('PPO'))
        record = json.loads(self.store.transcripts_path.read_text(encoding='utf-8'))
        record['outcome']['pro_turns'] = 3
        self.store.transcripts_path.write_text(json.dumps(record) + '\n', encoding='utf-8')
        with self.assertRaises(StoreIntegrityError):
            self.store.load_transcripts()

    def test_truncated_final_line_is_ignored(self):
        self.store.ensure_writable()
        self.store.append(make_transcript('PPP'))
        with self.store.transcripts_path.open('a', encoding='utf-8') as handle:
            handle.write('{"run_id": "trunc')
        self.assertEqual(len(self.store.load_transcripts()), 1)

    def test_summary_is_regenerable(self):
        self.store.ensure_writable()
        for transcript in (make_transcript('PPP', rep=0), make_transcript('POO', rep=1)):
            self.store.append(transcript)
        self.store.summary_path.unlink()
        frame = self.store.rebuild_summary()
        self.assertEqual(list(frame['fully_pro']), [1, 0])
        self.assertEqual(list(self.store.read_summary()['total_turns']), [3, 3])
