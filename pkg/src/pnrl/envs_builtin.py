"""Three desk-scale joint environments with exactly known optima.

* ``matrix.coord``: one-shot 2x2 coordination game, shared reward.
* ``rps``: one-shot rock-paper-scissors, zero-sum.
* ``kitchen.pass``: two stationary agents pass items down a 5-cell strip
  from a source to a delivery counter, shared reward, horizon 40.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .env import MIXED, REGISTRY, SHARED, ZERO_SUM, JointEnv, JointEnvSpec
from .errors import UnknownEnv
from .spaces import SpaceSpec

MATRIX_ID = "matrix.coord"
RPS_ID = "rps"
KITCHEN_ID = "kitchen.pass"

# matrix.coord payoff per joint action (row, col) -> shared reward
MATRIX_PAYOFF = {
    (0, 0): 1.0,  # both pick A
    (1, 1): 0.5,  # both pick B
    (0, 1): 0.0,
    (1, 0): 0.0,
}

ROCK, PAPER, SCISSORS = 0, 1, 2


def rps_payoff(a: int, b: int) -> float:
    """Row player's payoff: +1 win, -1 loss, 0 tie."""
    if a == b:
        return 0.0
    return 1.0 if (a - b) % 3 == 1 else -1.0


class MatrixCoordination(JointEnv):
    """One-shot coordination game with a constant null observation."""

    def __init__(self) -> None:
        null = SpaceSpec.discrete(1)
        act = SpaceSpec.discrete(2)
        super().__init__(
            JointEnvSpec(
                env_id=MATRIX_ID,
                n_agents=2,
                obs_spaces=(null, null),
                act_spaces=(act, act),
                horizon=1,
                reward_structure=SHARED,
            )
        )

    def _reset(self, rng):
        return [0, 0]

    def _step(self, actions):
        r = MATRIX_PAYOFF[(actions[0], actions[1])]
        return [0, 0], [r, r], True


class RockPaperScissors(JointEnv):
    """One-shot zero-sum rock-paper-scissors."""

    def __init__(self) -> None:
        null = SpaceSpec.discrete(1)
        act = SpaceSpec.discrete(3)
        super().__init__(
            JointEnvSpec(
                env_id=RPS_ID,
                n_agents=2,
                obs_spaces=(null, null),
                act_spaces=(act, act),
                horizon=1,
                reward_structure=ZERO_SUM,
            )
        )

    def _reset(self, rng):
        return [0, 0]

    def _step(self, actions):
        r = rps_payoff(actions[0], actions[1])
        return [0, 0], [r, -r], True


# kitchen actions
INTERACT_LEFT, INTERACT_RIGHT, STAY = 0, 1, 2
KITCHEN_HORIZON = 40


class ItemKitchen(JointEnv):
    """Item-passing kitchen on a 1x5 strip.

    Layout: cell0 source counter (infinite items), cell1 agent-0 station,
    cell2 pass counter (capacity 1), cell3 agent-1 station, cell4 delivery
    counter.  Agents never move; interact-left/right touches the adjacent
    cell on that side.  Delivering an item pays both agents +1.

    The shared work surface admits one effective manipulation per tick, and
    the downstream agent's takes precedence (the pipeline drains toward
    delivery first).  Other interact attempts that tick, and any interact
    that cannot change state (picking from an empty counter, placing on an
    occupied one), are silent no-ops.

    Agent i observes (own holding, pass-counter occupancy) encoded as the
    Discrete(4) index 2*holding + occupancy.
    """

    def __init__(self) -> None:
        obs = SpaceSpec.discrete(4)
        act = SpaceSpec.discrete(3)
        super().__init__(
            JointEnvSpec(
                env_id=KITCHEN_ID,
                n_agents=2,
                obs_spaces=(obs, obs),
                act_spaces=(act, act),
                horizon=KITCHEN_HORIZON,
                reward_structure=SHARED,
            )
        )
        self._h0 = False
        self._h1 = False
        self._counter = False

    def _reset(self, rng):
        self._h0 = False
        self._h1 = False
        self._counter = False
        return self._obs()

    def _obs(self):
        c = 1 if self._counter else 0
        return [(2 if self._h0 else 0) + c, (2 if self._h1 else 0) + c]

    def _step(self, actions):
        h0, h1, c, delivered = kitchen_transition((self._h0, self._h1, self._counter), tuple(actions))
        self._h0, self._h1, self._counter = h0, h1, c
        r = 1.0 if delivered else 0.0
        return self._obs(), [r, r], False


def kitchen_transition(state: tuple[bool, bool, bool], actions: tuple[int, int]):
    """Pure kitchen dynamics: (h0, h1, counter), actions -> next state + delivered.

    Scans interact attempts downstream-first (agent 1 before agent 0) and
    applies the first one that would change state; the rest no-op.
    """
    h0, h1, c = state
    delivered = False
    a0, a1 = actions

    # agent 1 side: left touches the pass counter, right the delivery counter
    if a1 == INTERACT_RIGHT and h1:
        h1 = False
        delivered = True
        return h0, h1, c, delivered
    if a1 == INTERACT_LEFT:
        if not h1 and c:
            h1, c = True, False
            return h0, h1, c, delivered
        if h1 and not c:
            h1, c = False, True
            return h0, h1, c, delivered

    # agent 0 side: left touches the source, right the pass counter
    if a0 == INTERACT_LEFT and not h0:
        h0 = True
        return h0, h1, c, delivered
    if a0 == INTERACT_RIGHT:
        if h0 and not c:
            h0, c = False, True
        elif not h0 and c:
            h0, c = True, False

    return h0, h1, c, delivered


def make_matrix() -> JointEnv:
    return MatrixCoordination()


def make_rps() -> JointEnv:
    return RockPaperScissors()


def make_kitchen() -> JointEnv:
    return ItemKitchen()


REGISTRY.register(MATRIX_ID, make_matrix)
REGISTRY.register(RPS_ID, make_rps)
REGISTRY.register(KITCHEN_ID, make_kitchen)


def make_builtin(env_id: str) -> JointEnv:
    """Fresh instance of a registered environment."""
    return REGISTRY.make(env_id)


@lru_cache(maxsize=None)
def optimal_return(env_id: str) -> tuple[float, ...]:
    """Per-agent value of the optimal joint policy, computed exactly.

    Shared-reward games are maximized by exhaustive search (one-shot games
    over joint actions, the kitchen by dynamic programming over joint action
    schedules at its horizon).  For the zero-sum game the equilibrium value
    is 0 by antisymmetry of the payoff matrix, which is verified here.
    """
    if env_id == MATRIX_ID:
        best = max(MATRIX_PAYOFF.values())
        return (best, best)
    if env_id == RPS_ID:
        for a in range(3):
            for b in range(3):
                assert rps_payoff(a, b) == -rps_payoff(b, a)
        return (0.0, 0.0)
    if env_id == KITCHEN_ID:
        best = _kitchen_optimum(KITCHEN_HORIZON)
        return (best, best)
    raise UnknownEnv(env_id)


def _kitchen_optimum(horizon: int) -> float:
    """Max total deliveries over all joint action schedules (value iteration)."""
    states = [(h0, h1, c) for h0 in (False, True) for h1 in (False, True) for c in (False, True)]
    actions = [(a0, a1) for a0 in range(3) for a1 in range(3)]
    value = {s: 0.0 for s in states}
    for _ in range(horizon):
        nxt = {}
        for s in states:
            best = -np.inf
            for a in actions:
                h0, h1, c, delivered = kitchen_transition(s, a)
                best = max(best, (1.0 if delivered else 0.0) + value[(h0, h1, c)])
            nxt[s] = best
        value = nxt
    return value[(False, False, False)]
