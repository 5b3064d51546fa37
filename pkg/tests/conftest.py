"""Shared fixtures: a 3-agent synthetic env, a step-counting wrapper, and
constant-policy builders."""

from __future__ import annotations

import numpy as np
import pytest

from pnrl import learners
from pnrl.env import MIXED, REGISTRY, JointEnv, JointEnvSpec
from pnrl.spaces import SpaceSpec

ECHO3_ID = "test.echo3"


class Echo3Env(JointEnv):
    """3-agent test env whose observations mix the other agents' actions,
    so any seat/step transposition shows up in recorded transitions."""

    def __init__(self):
        d5 = SpaceSpec.discrete(5)
        d2 = SpaceSpec.discrete(2)
        super().__init__(
            JointEnvSpec(
                env_id=ECHO3_ID,
                n_agents=3,
                obs_spaces=(d5, d5, d5),
                act_spaces=(d2, d2, d2),
                horizon=6,
                reward_structure=MIXED,
            )
        )

    def _reset(self, rng):
        return [0, 1, 2]

    def _step(self, actions):
        obs = [(actions[(i + 1) % 3] + i + self.t) % 5 for i in range(3)]
        rewards = [1.0 if actions[i] == actions[(i + 1) % 3] else 0.0 for i in range(3)]
        return obs, rewards, False


class StepCountingEnv(JointEnv):
    """Delegating wrapper that counts joint step() calls across episodes."""

    def __init__(self, inner: JointEnv):
        self.inner = inner
        self.spec = inner.spec
        self.step_count = 0

    def reset(self, seed=None):
        return self.inner.reset(seed=seed)

    def step(self, actions):
        self.step_count += 1
        return self.inner.step(actions)

    @property
    def t(self):
        return self.inner.t

    @property
    def done(self):
        return self.inner.done

    def _reset(self, rng):  # pragma: no cover - delegation only
        raise NotImplementedError

    def _step(self, actions):  # pragma: no cover - delegation only
        raise NotImplementedError


@pytest.fixture(scope="session", autouse=True)
def _register_echo3():
    REGISTRY.register(ECHO3_ID, Echo3Env, replace=True)
    yield
    REGISTRY.unregister(ECHO3_ID)


@pytest.fixture
def echo3():
    return Echo3Env()


def constant_policy(n_actions: int, action: int) -> learners.TableParams:
    """Deterministic one-action policy (exploration-free Q table)."""
    table = np.zeros((1, n_actions))
    table[0, action] = 1.0
    return learners.TableParams(algo="q", table=table, eps=0.0)


@pytest.fixture
def rock():
    return constant_policy(3, 0)


@pytest.fixture
def paper():
    return constant_policy(3, 1)


@pytest.fixture
def scissors():
    return constant_policy(3, 2)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    """Echo one pass/fail line per acceptance check after the run."""
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance checks")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
