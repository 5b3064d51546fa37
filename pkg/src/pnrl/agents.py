"""Agent objects: learning agents with their own buffer and learner, static
frozen wrappers, and per-seat partner pools."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import learners
from .env import ProjectedView
from .errors import InvalidObservation, MissingPartner
from .spaces import validate


class AgentRole(enum.Enum):
    EGO = "ego"
    PARTNER = "partner"


ROUND_ROBIN = "round_robin"
UNIFORM_RANDOM = "uniform_random"
SAMPLING_MODES = (ROUND_ROBIN, UNIFORM_RANDOM)


@dataclass(slots=True)
class Transition:
    """One per-seat slice of a joint step."""

    obs: object
    action: int
    reward: float
    next_obs: object
    done: bool
    log_prob: float = 0.0


class RolloutBuffer:
    """Ordered on-policy transition store, flushed into one update when full."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        self.capacity = capacity
        self.transitions: list[Transition] = []

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def full(self) -> bool:
        return len(self.transitions) >= self.capacity

    def append(self, tr: Transition) -> None:
        self.transitions.append(tr)

    def clear(self) -> None:
        self.transitions.clear()


def default_batch_size(algo: str) -> int:
    return 1 if algo == learners.Q else 64


class LearningAgent:
    """An agent that samples from and updates its own policy parameters."""

    def __init__(
        self,
        view: ProjectedView,
        algo: str,
        rng: np.random.Generator,
        hp: learners.Hyperparams | None = None,
        params: learners.PolicyParams | None = None,
        batch_size: int | None = None,
        policy: str = "auto",
        role: AgentRole = AgentRole.PARTNER,
    ):
        self.view = view
        self.algo = learners.resolve_algo(algo)
        self.hp = hp if hp is not None else learners.Hyperparams()
        self.rng = rng
        if params is None:
            params = learners.init_params(self.algo, view, rng, policy=policy, eps=self.hp.eps)
        self.params = params
        self.buffer = RolloutBuffer(batch_size if batch_size is not None else default_batch_size(self.algo))
        self.role = role
        self.updates_enabled = True
        self.update_count = 0

    @property
    def is_learning(self) -> bool:
        return True

    def act(self, obs):
        if not validate(self.view.obs_space, obs):
            raise InvalidObservation(f"observation {obs!r} invalid for {self.view.obs_space}")
        return learners.sample_action(self.params, obs, self.rng, eps=self.hp.eps)

    def record(self, tr: Transition) -> learners.UpdateReport | None:
        """Append a transition; a full buffer fires one learner update.

        With updates disabled the buffer still cycles but parameters are
        left untouched.
        """
        self.buffer.append(tr)
        report = None
        if self.buffer.full:
            if self.updates_enabled:
                self.params, report = learners.update(
                    self.params, self.buffer.transitions, self.hp, self.update_count
                )
                self.update_count += 1
            self.buffer.clear()
        return report

    def param_hash(self) -> str:
        return learners.param_hash(self.params)


class StaticPolicyAgent:
    """Immutable policy wrapper: never buffers, never updates."""

    def __init__(self, view: ProjectedView, params: learners.PolicyParams, rng: np.random.Generator):
        self.view = view
        self.params = learners.copy_params(params)
        self.rng = rng
        self.updates_enabled = False
        self.update_count = 0
        self.frozen_hash = learners.param_hash(self.params)

    @property
    def is_learning(self) -> bool:
        return False

    def act(self, obs):
        if not validate(self.view.obs_space, obs):
            raise InvalidObservation(f"observation {obs!r} invalid for {self.view.obs_space}")
        return learners.sample_action(self.params, obs, self.rng)

    def record(self, tr: Transition) -> None:
        return None

    def param_hash(self) -> str:
        return learners.param_hash(self.params)


Agent = LearningAgent | StaticPolicyAgent


def freeze(agent: Agent) -> StaticPolicyAgent:
    """Static snapshot sharing the agent's action distribution everywhere."""
    if isinstance(agent, StaticPolicyAgent):
        return agent
    params = learners.copy_params(agent.params)
    if isinstance(params, learners.TableParams) and params.algo == learners.Q:
        # a frozen Q policy keeps whatever exploration its owner used
        params.eps = agent.hp.eps
    return StaticPolicyAgent(agent.view, params, agent.rng)


class PartnerPool:
    """Ordered agents for one seat; selection changes only between episodes."""

    def __init__(self, sampling: str = ROUND_ROBIN, rng: np.random.Generator | None = None):
        if sampling not in SAMPLING_MODES:
            raise ValueError(f"unknown sampling mode {sampling!r}")
        self.sampling = sampling
        self.partners: list[Agent] = []
        self.rng = rng
        self.cursor = 0

    def __len__(self) -> int:
        return len(self.partners)

    def add(self, agent: Agent) -> None:
        self.partners.append(agent)

    def next_partner(self, episode_index: int) -> tuple[Agent, int]:
        if not self.partners:
            raise MissingPartner("partner pool is empty")
        if self.sampling == ROUND_ROBIN:
            idx = episode_index % len(self.partners)
        else:
            if self.rng is None:
                raise ValueError("uniform sampling requires an rng stream")
            idx = int(self.rng.integers(len(self.partners)))
        self.cursor = idx
        return self.partners[idx], idx


def next_partner(pool: PartnerPool, episode_index: int) -> Agent:
    agent, _ = pool.next_partner(episode_index)
    return agent
