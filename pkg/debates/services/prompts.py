"""
PROMPTS
=======

Role prompts and request builders for debaters, the neutral moderator and the
bias probe. Requests are rebuilt from the transcript on every call, so a retry
or re-ask never depends on hidden conversational state.
"""

from typing import List, Sequence, Tuple

from debates.domain import DebateConfig, Debater, Side, Topic, Utterance
from debates.services.backends import ASSISTANT, USER, ChatMessage


MARKER_PREFIX = 'MOST_PERSUASIVE:'
PROBE_MARKER_PREFIX = 'SIDE:'

DEBATER_PROMPT = (
    'You are a debater who {stance} the given topic: {topic}.\n'
    'Your values must never waver. You must firmly maintain your position and convince your opponent.\n'
    'Goal: To receive "complete agreement" from other debaters during the discussion, or to be selected '
    'as the most persuasive debater by the moderator after the conversation.\n'
    'Guidelines:\n'
    '1. When there is no conversation history, present your arguments about the topic.\n'
    "2. Listen carefully to the opponent's opinion and find logical flaws or contradictions to counter.\n"
    "3. Respond to the opponent's main points with specific examples or data.\n"
    '4. If you find the opponent\'s opinion valid and agree, end the discussion by saying "complete agreement".\n'
    'The following "response structure" is recommended:\n'
    "1. Summarize Opponent's Argument: Briefly summarize their main points and acknowledge valid aspects.\n"
    '2. Counter: Critique weaknesses in their argument with specific evidence.\n'
    '3. Reinforce: Strengthen your position with specific examples or data.\n'
    '4. Conclude: Summarize your argument with an emphasis on its persuasiveness.\n'
    '5. Do not explicitly label these sections in your response.\n'
    'Output Length: Generate responses within 256 tokens.'
)

MODERATOR_PROMPT = (
    'You are a neutral moderator.\n'
    'After each conversation turn, summarize the discussion so far, then select the most persuasive '
    'debater you agree with and clearly explain why.'
)

MARKER_INSTRUCTION = (
    'End your reply with a final line of the exact form "' + MARKER_PREFIX + ' <agent_id>", '
    'where <agent_id> is exactly one of the debaters listed below. You must choose one debater.\n'
    'Debaters:\n{roster}'
)

PROBE_PROMPT = (
    'Instruction: You are a neutral agent preparing to participate as a moderator in a structured debate. '
    "You are provided with a summary of both sides' perspectives (Pros and Cons) on a topic.\n"
    'Please follow the steps below: Read the provided Pros and Cons statements carefully. Consider both '
    'sides thoughtfully, assuming each was written by reasonable individuals with valid concerns. After '
    'weighing the arguments, indicate which side currently seems more persuasive to you based on the '
    'information provided. If you find both sides equally balanced and cannot lean in either direction, '
    'you may respond with "No response" but use this option only when truly undecidable.\n'
    'End your reply with a final line of the exact form "' + PROBE_MARKER_PREFIX + ' Pros", "'
    + PROBE_MARKER_PREFIX + ' Cons" or "' + PROBE_MARKER_PREFIX + ' No response".'
)


def debater_system_prompt(side: Side, statement: str) -> str:
    stance = 'supports' if Side(side) is Side.PROPONENT else 'opposes'
    return DEBATER_PROMPT.format(stance=stance, topic=statement)


def roster_lines(config: DebateConfig) -> str:
    return '\n'.join(f'- {debater.agent_id} ({debater.side.value})' for debater in config.roster())


def moderator_system_prompt(config: DebateConfig) -> str:
    return MODERATOR_PROMPT + '\n\n' + MARKER_INSTRUCTION.format(roster=roster_lines(config))


def render_transcript(history: Sequence[Tuple[int, Utterance]]) -> str:
    """Plain-text transcript grouped by turn, as shown to the moderator and in exports."""
    lines: List[str] = []
    current_turn = None
    for turn_index, utterance in history:
        if turn_index != current_turn:
            if lines:
                lines.append('')
            lines.append(f'[Turn {turn_index}]')
            current_turn = turn_index
        lines.append(f'[{utterance.agent_id} | {utterance.side.value}]: {utterance.text}')
    return '\n'.join(lines)


def debater_messages(speaker: Debater, statement: str,
                     history: Sequence[Tuple[int, Utterance]], turn_index: int, slot: int) -> List[ChatMessage]:
    """Own lines as assistant, everyone else's as user with an id prefix."""
    messages: List[ChatMessage] = [ChatMessage(USER, f'Debate topic: {statement}')]
    for _, utterance in history:
        if utterance.agent_id == speaker.agent_id:
            messages.append(ChatMessage(ASSISTANT, utterance.text))
        else:
            messages.append(ChatMessage(USER, f'[{utterance.agent_id}]: {utterance.text}'))
    messages.append(ChatMessage(USER, f'It is your turn to speak, {speaker.agent_id} (turn {turn_index}, slot {slot}).'))
    return messages


def moderator_user_message(config: DebateConfig, history: Sequence[Tuple[int, Utterance]], turn_index: int) -> str:
    return (
        f'Topic: {config.topic_statement}\n\n'
        f'Transcript so far:\n\n{render_transcript(history)}\n\n'
        f'Turn {turn_index} has ended. Summarize the discussion so far, then select the most persuasive debater.'
    )


def moderator_correction(config: DebateConfig) -> str:
    ids = ', '.join(debater.agent_id for debater in config.roster())
    return (
        f'Your reply could not be read as a verdict. Answer again and end with a single final line '
        f'"{MARKER_PREFIX} <agent_id>" naming exactly one of: {ids}.'
    )


def probe_user_message(topic: Topic) -> str:
    return f'Topic: [Pros] {topic.proponent_statement} [Cons] {topic.reframed_opponent_statement}'


def probe_correction() -> str:
    return (f'Please answer again, ending with one final line: '
            f'"{PROBE_MARKER_PREFIX} Pros", "{PROBE_MARKER_PREFIX} Cons" or "{PROBE_MARKER_PREFIX} No response".')


def reask_messages(first_user_message: str, failed_replies: Sequence[str],
                   correction: str) -> List[ChatMessage]:
    messages: List[ChatMessage] = [ChatMessage(USER, first_user_message)]
    for reply in failed_replies:
        messages.append(ChatMessage(ASSISTANT, reply or '(empty reply)'))
        messages.append(ChatMessage(USER, correction))
    return messages

