from collections import Counter

from django.test import SimpleTestCase

from debates.domain import Side
from debates.exceptions import ConfigurationError
from debates.services.scheduling import first_side_for, randomize_speaking_order

PRO, OPP = Side.PROPONENT, Side.OPPONENT


class SpeakingOrderTests(SimpleTestCase):

    def test_sides_alternate_and_first_side_holds(self):
        schedule = randomize_speaking_order({PRO: ['pro_1', 'pro_2'], OPP: ['opp_1']}, seed=3)
        self.assertEqual(len(schedule.turns), 3)
        for turn in schedule.turns:
            sides = [slot.side for slot in turn]
            self.assertEqual(len(sides), 6)
            self.assertEqual(sides[0], schedule.first_side)
            for previous, current in zip(sides, sides[1:]):
                self.assertNotEqual(previous, current)
            self.assertEqual([slot.slot for slot in turn], [1, 2, 3, 4, 5, 6])

    def test_round_robin_continues_across_turns(self):
        schedule = randomize_speaking_order({PRO: ['pro_1', 'pro_2'], OPP: ['opp_1']}, seed=3)
        pro_speakers = [slot.agent_id for turn in schedule.turns for slot in turn if slot.side is PRO]
        self.assertEqual(pro_speakers, ['pro_1', 'pro_2'] * 4 + ['pro_1'])
        counts = Counter(pro_speakers)
        self.assertEqual(counts['pro_1'], 5)
        self.assertEqual(counts['pro_2'], 4)

    def test_eight_agents_rotate_without_repeats_early(self):
        agents = [f'opp_{i}' for i in range(1, 9)]
        schedule = randomize_speaking_order({PRO: ['pro_1'], OPP: agents}, seed=11)
        opp_speakers = [slot.agent_id for turn in schedule.turns for slot in turn if slot.side is OPP]
        self.assertEqual(opp_speakers, agents + ['opp_1'])

    def test_same_seed_same_schedule(self):
        agents = {PRO: ['pro_1'], OPP: ['opp_1', 'opp_2']}
        self.assertEqual(randomize_speaking_order(agents, 42), randomize_speaking_order(agents, 42))

    def test_first_side_is_fair_over_seeds(self):
        openings = Counter(first_side_for(seed) for seed in range(10_000))
        share = openings[PRO] / 10_000
        self.assertGreater(share, 0.47)
        self.assertLess(share, 0.53)

    def test_empty_side_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            randomize_speaking_order({PRO: ['pro_1'], OPP: []}, seed=1)
