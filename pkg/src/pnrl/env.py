"""Joint multiagent environment contract and per-agent projection.

A joint environment steps all n agents at once: step() consumes one action
per agent and emits one observation and one reward per agent.  Each seat i
also has a single-agent *projected view* (its own spaces only); what the
other seats do reaches seat i only through the joint dynamics.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IndexOutOfRange, InvalidAction, SteppedAfterDone, UnknownEnv
from .spaces import SpaceSpec, validate

SHARED = "shared"
MIXED = "mixed"
ZERO_SUM = "zero_sum"
REWARD_STRUCTURES = (SHARED, MIXED, ZERO_SUM)


@dataclass(frozen=True)
class JointEnvSpec:
    """Static description of a joint environment."""

    env_id: str
    n_agents: int
    obs_spaces: tuple[SpaceSpec, ...]
    act_spaces: tuple[SpaceSpec, ...]
    horizon: int
    reward_structure: str

    def __post_init__(self) -> None:
        if self.n_agents < 2:
            raise ValueError("joint environments need n_agents >= 2")
        if len(self.obs_spaces) != self.n_agents or len(self.act_spaces) != self.n_agents:
            raise ValueError("one obs/act space required per agent")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.reward_structure not in REWARD_STRUCTURES:
            raise ValueError(f"unknown reward structure {self.reward_structure!r}")

    def as_dict(self) -> dict:
        return {
            "env_id": self.env_id,
            "n_agents": self.n_agents,
            "obs_spaces": [s.as_dict() for s in self.obs_spaces],
            "act_spaces": [s.as_dict() for s in self.act_spaces],
            "horizon": self.horizon,
            "reward_structure": self.reward_structure,
        }

    @staticmethod
    def from_dict(d: dict) -> "JointEnvSpec":
        return JointEnvSpec(
            env_id=d["env_id"],
            n_agents=int(d["n_agents"]),
            obs_spaces=tuple(SpaceSpec.from_dict(s) for s in d["obs_spaces"]),
            act_spaces=tuple(SpaceSpec.from_dict(s) for s in d["act_spaces"]),
            horizon=int(d["horizon"]),
            reward_structure=d["reward_structure"],
        )


@dataclass(slots=True)
class JointStep:
    """One joint transition.

    ``obs`` holds the observations *after* the transition; ``t`` counts joint
    steps taken this episode, so the first step of an episode has t == 1.
    """

    t: int
    obs: list
    actions: list
    rewards: list[float]
    done: bool


@dataclass(frozen=True)
class ProjectedView:
    """Seat i's single-agent view of a joint environment."""

    agent_index: int
    obs_space: SpaceSpec
    act_space: SpaceSpec


def project(spec: JointEnvSpec, i: int) -> ProjectedView:
    """The i-th seat's view; spaces are entry i of the joint spec."""
    if not 0 <= i < spec.n_agents:
        raise IndexOutOfRange(f"agent index {i} outside [0, {spec.n_agents})")
    return ProjectedView(agent_index=i, obs_space=spec.obs_spaces[i], act_space=spec.act_spaces[i])


class JointEnv(ABC):
    """Base class for joint environments.

    Subclasses implement ``_reset`` and ``_step``; this class owns the step
    counter, the horizon cut, action validation, and the done guard.
    Instances are single-threaded and never shared between runs.
    """

    spec: JointEnvSpec

    def __init__(self, spec: JointEnvSpec) -> None:
        self.spec = spec
        self._t = 0
        self._done = True  # unusable until reset()
        self._rng: np.random.Generator | None = None

    def reset(self, seed: int | None = None) -> list:
        """Start a fresh episode and return the n initial observations."""
        self._rng = np.random.default_rng(seed)
        self._t = 0
        self._done = False
        obs = self._reset(self._rng)
        return obs

    def step(self, actions: list) -> JointStep:
        """Advance one joint timestep with one action per agent."""
        if self._done:
            raise SteppedAfterDone(f"{self.spec.env_id}: episode already finished")
        acts = self.spec.act_spaces
        for i in range(self.spec.n_agents):
            if not validate(acts[i], actions[i]):
                raise InvalidAction(i, actions[i], acts[i])
        obs, rewards, terminal = self._step(actions)
        self._t += 1
        done = terminal or self._t >= self.spec.horizon
        self._done = done
        return JointStep(t=self._t, obs=obs, actions=list(actions), rewards=rewards, done=done)

    @property
    def t(self) -> int:
        return self._t

    @property
    def done(self) -> bool:
        return self._done

    @abstractmethod
    def _reset(self, rng: np.random.Generator) -> list:
        """Set up episode state; return initial observations."""

    @abstractmethod
    def _step(self, actions: list) -> tuple[list, list[float], bool]:
        """Apply one joint action; return (obs, rewards, terminal)."""


class EnvRegistry:
    """String-id registry of environment constructors."""

    def __init__(self) -> None:
        self._factories: dict[str, Callable[[], JointEnv]] = {}

    def register(self, env_id: str, factory: Callable[[], JointEnv], replace: bool = False) -> None:
        if env_id in self._factories and not replace:
            raise ValueError(f"env id {env_id!r} already registered")
        self._factories[env_id] = factory

    def unregister(self, env_id: str) -> None:
        self._factories.pop(env_id, None)

    def make(self, env_id: str) -> JointEnv:
        try:
            factory = self._factories[env_id]
        except KeyError:
            raise UnknownEnv(env_id) from None
        return factory()

    def __contains__(self, env_id: str) -> bool:
        return env_id in self._factories

    def ids(self) -> list[str]:
        return sorted(self._factories)


REGISTRY = EnvRegistry()
