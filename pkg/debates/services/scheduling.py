"""
SPEAKING SCHEDULE
=================

Builds the per-turn slot order of a debate.

Rules:
- each side owns `slots_per_side_per_turn` slots in every turn
- slots of the two sides strictly alternate
- within a side, slots rotate round-robin over that side's agents and the
  rotation continues across turns
- which side opens is a fair coin drawn from the debate seed and holds for the
  whole debate

INPUTS:  agent ids per side, the debate seed
OUTPUTS: SpeakingSchedule
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from debates.domain import DEFAULT_MAX_TURNS, DEFAULT_SLOTS_PER_SIDE, Side
from debates.exceptions import ConfigurationError


@dataclass(frozen=True)
class Slot:
    agent_id: str
    side: Side
    slot: int  # 1-based position within the turn


@dataclass(frozen=True)
class SpeakingSchedule:
    first_side: Side
    turns: Tuple[Tuple[Slot, ...], ...]

    def turn(self, index: int) -> Tuple[Slot, ...]:
        """Slots of turn `index` (1-based)."""
        return self.turns[index - 1]


def first_side_for(seed: int) -> Side:
    rng = np.random.default_rng(seed)
    return Side.PROPONENT if rng.integers(0, 2) == 0 else Side.OPPONENT


def randomize_speaking_order(agents_per_side: Dict[Side, Sequence[str]], seed: int,
                             max_turns: int = DEFAULT_MAX_TURNS,
                             slots_per_side_per_turn: int = DEFAULT_SLOTS_PER_SIDE) -> SpeakingSchedule:
    """
    INPUTS:
        agents_per_side: Dict[Side, Sequence[str]] - agent ids of each side in roster order
        seed: int - the debate seed
        max_turns: int - number of turns to schedule
        slots_per_side_per_turn: int - speaking slots each side gets per turn

    OUTPUTS:
        SpeakingSchedule with `max_turns` turns of 2 * slots_per_side_per_turn slots
    """
    for side in Side:
        if not agents_per_side.get(side):
            raise ConfigurationError(f'{side.value} side has no agents')

    first = first_side_for(seed)
    order = (first, first.other)
    pointers = {Side.PROPONENT: 0, Side.OPPONENT: 0}

    turns: List[Tuple[Slot, ...]] = []
    for _ in range(max_turns):
        slots: List[Slot] = []
        for position in range(2 * slots_per_side_per_turn):
            side = order[position % 2]
            agents = agents_per_side[side]
            agent_id = agents[pointers[side] % len(agents)]
            pointers[side] += 1
            slots.append(Slot(agent_id=agent_id, side=side, slot=position + 1))
        turns.append(tuple(slots))

    return SpeakingSchedule(first_side=first, turns=tuple(turns))
