from django.test import SimpleTestCase

from debates.domain import MODERATOR_ID, PROBE_AGENT_ID, Side, Utterance
from debates.exceptions import ConfigurationError, ScriptError
from debates.services.backends import ASSISTANT, USER, ChatMessage, ChatRequest, RequestTag
from debates.services.prompts import (
    MARKER_PREFIX,
    debater_messages,
    debater_system_prompt,
    moderator_system_prompt,
    render_transcript,
)
from debates.services.scripts import ScriptTable, VerdictPolicyScript, load_script
from debates.tests.factories import debate_config

ROSTER = (('pro_1', 'Proponent'), ('pro_2', 'Proponent'), ('opp_1', 'Opponent'))


def request_for(tag: RequestTag) -> ChatRequest:
    return ChatRequest(system_prompt='', messages=(), temperature=0.7, max_tokens=256, tag=tag)


class PromptTests(SimpleTestCase):

    def test_debater_prompt_takes_stance(self):
        self.assertIn('who supports the given topic: UBI.', debater_system_prompt(Side.PROPONENT, 'UBI'))
        self.assertIn('who opposes the given topic: UBI.', debater_system_prompt(Side.OPPONENT, 'UBI'))
        self.assertIn('"complete agreement"', debater_system_prompt(Side.OPPONENT, 'UBI'))

    def test_moderator_prompt_lists_roster(self):
        prompt = moderator_system_prompt(debate_config('a'))
        self.assertIn('- pro_2 (Proponent)', prompt)
        self.assertIn('- opp_1 (Opponent)', prompt)
        self.assertIn(MARKER_PREFIX, prompt)

    def test_debater_sees_own_lines_as_assistant(self):
        config = debate_config('a')
        speaker = config.roster()[0]
        history = [
            (1, Utterance('pro_1', Side.PROPONENT, 'm', 'my point', 1)),
            (1, Utterance('opp_1', Side.OPPONENT, 'm', 'their point', 2)),
        ]
        messages = debater_messages(speaker, 'UBI', history, 1, 3)
        self.assertEqual(messages[1], ChatMessage(ASSISTANT, 'my point'))
        self.assertEqual(messages[2], ChatMessage(USER, '[opp_1]: their point'))
        self.assertEqual(messages[-1].role, USER)

    def test_transcript_groups_by_turn(self):
        history = [
            (1, Utterance('pro_1', Side.PROPONENT, 'm', 'one', 1)),
            (2, Utterance('opp_1', Side.OPPONENT, 'm', 'two', 1)),
        ]
        self.assertEqual(render_transcript(history),
                         '[Turn 1]\n[pro_1 | Proponent]: one\n\n[Turn 2]\n[opp_1 | Opponent]: two')

    def test_request_normalization(self):
        request = ChatRequest(
            system_prompt='s',
            messages=(ChatMessage(ASSISTANT, 'first'), ChatMessage(ASSISTANT, 'second'),
                      ChatMessage(USER, '  '), ChatMessage(USER, 'question')),
            temperature=0.7, max_tokens=256,
        ).normalized()
        self.assertEqual([m.role for m in request.messages], [USER, ASSISTANT, USER])
        self.assertEqual(request.messages[1].content, 'first\n\nsecond')


class ScriptTableTests(SimpleTestCase):

    def setUp(self):
        self.table = ScriptTable(
            lines={'pro_1:1:1': 'exact', 'pro_1:2:*': 'any slot', 'opp_1:*:*': 'any turn'},
            filler={'pro_2': 'pro_2 filler'},
        )

    def test_lookup_order(self):
        self.assertEqual(self.table.line_for(RequestTag(agent_id='pro_1', turn=1, slot=1)), 'exact')
        self.assertEqual(self.table.line_for(RequestTag(agent_id='pro_1', turn=2, slot=5)), 'any slot')
        self.assertEqual(self.table.line_for(RequestTag(agent_id='opp_1', turn=3, slot=2)), 'any turn')
        self.assertEqual(self.table.line_for(RequestTag(agent_id='pro_2', turn=3, slot=2)), 'pro_2 filler')

    def test_missing_key_names_the_key(self):
        with self.assertRaises(ScriptError) as caught:
            self.table.line_for(RequestTag(agent_id='pro_1', turn=3, slot=4))
        self.assertEqual(caught.exception.key, 'pro_1:3:4')

    def test_default_filler(self):
        table = ScriptTable(default_filler='filler')
        self.assertEqual(table.line_for(RequestTag(agent_id='opp_9', turn=1, slot=1)), 'filler')


class VerdictPolicyScriptTests(SimpleTestCase):

    def moderator_tag(self, seed, turn=1, topic_id='ubi', scenario_id='a'):
        return RequestTag(agent_id=MODERATOR_ID, turn=turn, slot=1, seed=seed,
                          topic_id=topic_id, scenario_id=scenario_id, roster=ROSTER)

    def test_picks_first_agent_of_chosen_side(self):
        always = VerdictPolicyScript(p_proponent=1.0)
        never = VerdictPolicyScript(p_proponent=0.0)
        self.assertTrue(always.reply(request_for(self.moderator_tag(1))).endswith(f'{MARKER_PREFIX} pro_1'))
        self.assertTrue(never.reply(request_for(self.moderator_tag(1))).endswith(f'{MARKER_PREFIX} opp_1'))

    def test_overrides_take_precedence(self):
        script = VerdictPolicyScript(p_proponent=0.0, by_topic={'ubi': 1.0}, by_scenario={'a': 0.0})
        self.assertEqual(script.probability_for(self.moderator_tag(1)), 1.0)
        self.assertEqual(script.probability_for(self.moderator_tag(1, topic_id='other')), 0.0)

    def test_deterministic_and_close_to_target_rate(self):
        script = VerdictPolicyScript(p_proponent=0.7)
        picks = [script.choose_side(self.moderator_tag(seed)) for seed in range(2000)]
        self.assertEqual(picks, [script.choose_side(self.moderator_tag(seed)) for seed in range(2000)])
        share = sum(1 for side in picks if side is Side.PROPONENT) / len(picks)
        self.assertAlmostEqual(share, 0.7, delta=0.04)

    def test_debaters_and_probe(self):
        script = VerdictPolicyScript(probe_answer='Pros')
        self.assertEqual(script.reply(request_for(RequestTag(agent_id='pro_1'))), script.debater_line)
        self.assertTrue(script.reply(request_for(RequestTag(agent_id=PROBE_AGENT_ID))).endswith('SIDE: Pros'))

    def test_load_script_kinds(self):
        policy = load_script('p', {'kind': 'verdict_policy', 'p_proponent': '0.25', 'by_topic': {'ubi': 1}})
        self.assertEqual(policy.p_proponent, 0.25)
        self.assertEqual(policy.by_topic, {'ubi': 1.0})
        self.assertIsInstance(load_script('t', {'lines': {'pro_1:1:1': 'x'}}), ScriptTable)
        with self.assertRaises(ConfigurationError):
            load_script('bad', {'kind': 'markov'})
