from django.test import SimpleTestCase

from analysis.exceptions import StatisticsInputError, UndefinedMetricError
from analysis.services.metrics import (
    ContingencyTable2x2,
    build_contingency,
    conformity_rate,
    full_conformity_ratio,
    summarize,
)
from debates.domain import Side
from debates.services.backends import ScriptedBackend
from debates.services.protocol import run_debate
from debates.services.scripts import VerdictPolicyScript
from debates.services.utils import derive_seed
from debates.tests.factories import debate_config, make_transcript, make_transcripts


class ConformityRateTests(SimpleTestCase):

    def test_micro_macro_and_full(self):
        summary = summarize(make_transcripts(['PPP', 'POO', 'OOO']))
        self.assertAlmostEqual(summary.cr_micro, 4 / 9)
        self.assertAlmostEqual(summary.cr_macro, 4 / 9)
        self.assertAlmostEqual(summary.fcr, 1 / 3)
        self.assertEqual(summary.proponent_supported_turns, 4)
        self.assertEqual(summary.total_evaluated_turns, 9)
        self.assertEqual(summary.fully_proponent_discussions, 1)
        self.assertEqual(summary.total_discussions, 3)

    def test_micro_and_macro_differ_with_early_termination(self):
        transcripts = [make_transcript('P', rep=0, early_turn=1), make_transcript('OOO', rep=1)]
        summary = conformity_rate(transcripts)
        self.assertAlmostEqual(summary.cr_micro, 1 / 4)
        self.assertAlmostEqual(summary.cr_macro, 1 / 2)
        self.assertEqual(summary.early_terminated_discussions, 1)

    def test_opponent_side(self):
        summary = summarize(make_transcripts(['PPP', 'POO', 'OOO']), side=Side.OPPONENT)
        self.assertAlmostEqual(summary.cr_micro, 5 / 9)
        self.assertAlmostEqual(summary.fcr, 1 / 3)

    def test_zero_turn_transcripts_are_excluded(self):
        transcripts = [make_transcript('PP', rep=0, early_turn=2), make_transcript('', rep=1, early_turn=1)]
        summary = full_conformity_ratio(transcripts)
        self.assertEqual(summary.fcr, 1.0)
        self.assertEqual(summary.excluded_discussions, 1)
        self.assertEqual(summary.total_discussions, 1)

    def test_undefined_on_empty_input(self):
        with self.assertRaises(UndefinedMetricError):
            conformity_rate([])
        with self.assertRaises(UndefinedMetricError):
            summarize([make_transcript('', early_turn=1)])

    def test_scripted_policy_rates(self):
        backend = ScriptedBackend({'policy': VerdictPolicyScript(p_proponent=0.7)})
        transcripts = [
            run_debate(debate_config('a', rep=rep, seed=derive_seed(2024, rep)), backend)
            for rep in range(200)
        ]
        summary = summarize(transcripts)
        self.assertAlmostEqual(summary.cr_micro, 0.7, delta=0.06)
        self.assertAlmostEqual(summary.fcr, 0.343, delta=0.09)


class ContingencyTests(SimpleTestCase):

    def test_counts_from_transcripts(self):
        table = build_contingency(make_transcripts(['PPP'] * 10), make_transcripts(['OOO'] * 10, scenario_id='b'),
                                  ('pro-majority', 'opp-majority'))
        self.assertEqual(table.observed, ((30, 0), (0, 30)))
        self.assertEqual(table.row_labels, ('pro-majority', 'opp-majority'))
        self.assertEqual(table.expected, ((15.0, 15.0), (15.0, 15.0)))

    def test_margins(self):
        table = ContingencyTable2x2.from_counts([[20, 10], [10, 20]])
        self.assertEqual(table.row_totals, (30, 30))
        self.assertEqual(table.column_totals, (30, 30))
        self.assertEqual(table.n, 60)

    def test_invalid_tables(self):
        with self.assertRaises(StatisticsInputError):
            ContingencyTable2x2.from_counts([[1, -1], [2, 3]])
        with self.assertRaises(StatisticsInputError):
            ContingencyTable2x2.from_counts([[1, 2, 3], [4, 5, 6]])
