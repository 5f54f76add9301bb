from fractions import Fraction

from django.test import SimpleTestCase

from debates.domain import (
    DebateConfig,
    Framing,
    IntelligenceRelation,
    Side,
)
from debates.services.utils import derive_seed, stable_hash
from debates.tests.factories import SCENARIOS, UBI, debate_config, make_transcript


class ScenarioTests(SimpleTestCase):

    def test_majority_and_intelligence(self):
        self.assertEqual(SCENARIOS['a'].majority_ratio, Fraction(2))
        self.assertIs(SCENARIOS['a'].majority_side, Side.PROPONENT)
        self.assertIs(SCENARIOS['b'].majority_side, Side.OPPONENT)
        self.assertIsNone(SCENARIOS['e'].majority_side)
        self.assertIs(SCENARIOS['e'].intelligence_relation, IntelligenceRelation.SUPERIOR)
        self.assertIs(SCENARIOS['f'].intelligence_relation, IntelligenceRelation.INFERIOR)
        self.assertIs(SCENARIOS['a'].intelligence_relation, IntelligenceRelation.EQUIVALENT)

    def test_ratio_scenarios(self):
        self.assertEqual(SCENARIOS['1:8'].majority_ratio, Fraction(1, 8))
        self.assertEqual(SCENARIOS['1:8'].head_count_ratio, 8)
        self.assertEqual(SCENARIOS['4:1'].head_count_ratio, 4)


class DebateConfigTests(SimpleTestCase):

    def test_roster_order_and_models(self):
        config = debate_config('h')
        roster = config.roster()
        self.assertEqual([d.agent_id for d in roster], ['pro_1', 'opp_1', 'opp_2'])
        self.assertEqual(roster[0].model.model_id, 'scripted-small')
        self.assertEqual(roster[1].model.model_id, 'scripted-large')
        self.assertIs(config.side_of('opp_2'), Side.OPPONENT)
        self.assertIsNone(config.side_of('moderator'))

    def test_run_id_depends_on_identity_not_seed(self):
        first = debate_config('a', rep=3, seed=1)
        second = debate_config('a', rep=3, seed=99)
        self.assertEqual(first.run_id, second.run_id)
        self.assertNotEqual(first.config_hash, second.config_hash)
        self.assertNotEqual(first.run_id, debate_config('a', rep=4).run_id)
        self.assertEqual(len(first.run_id), 32)

    def test_round_trip_through_dict(self):
        config = debate_config('j', framing=Framing.REVERSED)
        self.assertEqual(DebateConfig.from_dict(config.to_dict()), config)
        self.assertEqual(config.topic_statement, UBI.reframed_opponent_statement)

    def test_seed_derivation_is_stable(self):
        identity = ['A', 'a', 'ubi', 'original', 'scripted', 0]
        self.assertEqual(derive_seed(7, identity), derive_seed(7, list(identity)))
        self.assertNotEqual(derive_seed(7, identity), derive_seed(8, identity))
        self.assertLess(derive_seed(7, identity), 2 ** 64)
        self.assertEqual(stable_hash({'b': 1, 'a': 2}), stable_hash({'a': 2, 'b': 1}))


class TranscriptTests(SimpleTestCase):

    def test_outcome_is_recounted_from_verdicts(self):
        transcript = make_transcript('POP')
        self.assertEqual(transcript.outcome.proponent_supported_turns, 2)
        self.assertEqual(transcript.outcome.total_evaluated_turns, 3)
        self.assertAlmostEqual(transcript.conformity_rate, 2 / 3)
        self.assertFalse(transcript.fully_proponent)
        self.assertTrue(make_transcript('PPP').fully_proponent)
        self.assertEqual(transcript.invariant_violations(), [])

    def test_short_transcript_needs_early_termination(self):
        self.assertEqual(make_transcript('PP', early_turn=2).invariant_violations(), [])
        problems = make_transcript('PP').invariant_violations()
        self.assertTrue(any('without early termination' in problem for problem in problems))

    def test_empty_transcript_rate_is_nan(self):
        transcript = make_transcript('', early_turn=1)
        self.assertNotEqual(transcript.conformity_rate, transcript.conformity_rate)
        self.assertFalse(transcript.fully_proponent)
