import math

import numpy as np
import pytest

from pnrl.agents import (
    LearningAgent,
    PartnerPool,
    RolloutBuffer,
    StaticPolicyAgent,
    Transition,
    freeze,
    next_partner,
)
from pnrl.env import ProjectedView
from pnrl.errors import InvalidObservation, MissingPartner
from pnrl.learners import TableParams, action_distribution
from pnrl.rng import stream
from pnrl.spaces import SpaceSpec

VIEW3 = ProjectedView(0, SpaceSpec.discrete(1), SpaceSpec.discrete(3))


def make_transition(obs=0, action=0, reward=0.0, next_obs=0, done=True):
    return Transition(obs=obs, action=action, reward=reward, next_obs=next_obs, done=done)


def test_fresh_agent_acts_uniformly():
    agent = LearningAgent(VIEW3, "reinforce", stream(0, "a"))
    a, logp = agent.act(0)
    assert a in (0, 1, 2)
    assert math.isclose(logp, math.log(1 / 3), rel_tol=1e-12)


def test_static_rock_always_rock(rock):
    agent = StaticPolicyAgent(VIEW3, rock, stream(0, "b"))
    for _ in range(25):
        assert agent.act(0) == (0, 0.0)


def test_act_validates_observation():
    agent = LearningAgent(VIEW3, "q", stream(0, "c"))
    with pytest.raises(InvalidObservation):
        agent.act(5)
    with pytest.raises(InvalidObservation):
        agent.act("zero")


def test_act_reproducible_across_identical_streams():
    runs = []
    for _ in range(2):
        agent = LearningAgent(VIEW3, "reinforce", stream(42, "repro"))
        runs.append([agent.act(0) for _ in range(50)])
    assert runs[0] == runs[1]


def test_buffer_capacity_validation():
    with pytest.raises(ValueError):
        RolloutBuffer(0)


def test_record_fires_update_at_capacity():
    agent = LearningAgent(VIEW3, "reinforce", stream(0, "d"), batch_size=4)
    before = agent.param_hash()
    reports = [agent.record(make_transition(action=1, reward=1.0)) for _ in range(4)]
    assert reports[:3] == [None, None, None]
    assert reports[3] is not None
    assert reports[3].update_index == 0
    assert agent.update_count == 1
    assert len(agent.buffer) == 0
    assert agent.param_hash() != before
    # next fill reports update_index 1
    for _ in range(3):
        assert agent.record(make_transition()) is None
    assert agent.record(make_transition()).update_index == 1


def test_default_batch_sizes():
    assert LearningAgent(VIEW3, "q", stream(0, "e")).buffer.capacity == 1
    assert LearningAgent(VIEW3, "a2c", stream(0, "e")).buffer.capacity == 64
    assert LearningAgent(VIEW3, "ppo", stream(0, "e")).algo == "a2c"


def test_static_record_is_noop(rock):
    agent = StaticPolicyAgent(VIEW3, rock, stream(0, "f"))
    for _ in range(10):
        assert agent.record(make_transition()) is None
    assert agent.param_hash() == agent.frozen_hash


def test_updates_disabled_keeps_params_frozen():
    agent = LearningAgent(VIEW3, "q", stream(0, "g"), batch_size=2)
    agent.updates_enabled = False
    before = agent.param_hash()
    for _ in range(7):
        agent.record(make_transition(reward=1.0))
    # buffer still cycles (never exceeds capacity) but params are untouched
    assert len(agent.buffer) == 1
    assert agent.update_count == 0
    assert agent.param_hash() == before


def test_freeze_preserves_distribution():
    view = ProjectedView(0, SpaceSpec.discrete(4), SpaceSpec.discrete(3))
    agent = LearningAgent(view, "q", stream(3, "h"), batch_size=1)
    for k in range(200):
        s = k % 4
        agent.record(make_transition(obs=s, action=k % 3, reward=float(k % 2), next_obs=(s + 1) % 4, done=s == 3))
    frozen = freeze(agent)
    assert not frozen.is_learning
    for s in range(4):
        a = action_distribution(agent.params, s)
        b = action_distribution(frozen.params, s)
        assert np.array_equal(a, b)
    # freezing a static agent is the identity
    assert freeze(frozen) is frozen


def test_frozen_agent_immutable_under_steps():
    view = ProjectedView(0, SpaceSpec.discrete(1), SpaceSpec.discrete(2))
    frozen = freeze(LearningAgent(view, "reinforce", stream(1, "i")))
    h = frozen.param_hash()
    for _ in range(10_000):
        frozen.act(0)
        frozen.record(make_transition())
    assert frozen.param_hash() == h == frozen.frozen_hash


def test_round_robin_cycles_in_order(rock, paper, scissors):
    pool = PartnerPool("round_robin")
    agents = [StaticPolicyAgent(VIEW3, p, stream(0, "j", i)) for i, p in enumerate((rock, paper, scissors))]
    for a in agents:
        pool.add(a)
    picks = [pool.next_partner(ep)[1] for ep in range(7)]
    assert picks == [0, 1, 2, 0, 1, 2, 0]
    assert pool.next_partner(5)[0] is agents[2]


def test_single_partner_pool_always_selected(rock):
    pool = PartnerPool("round_robin")
    agent = StaticPolicyAgent(VIEW3, rock, stream(0, "k"))
    pool.add(agent)
    assert all(pool.next_partner(ep)[0] is agent for ep in range(5))


def test_empty_pool_raises():
    with pytest.raises(MissingPartner):
        PartnerPool("round_robin").next_partner(0)
    with pytest.raises(ValueError):
        PartnerPool("fifo")


def test_uniform_sampling_frequencies(rock, paper, scissors):
    pool = PartnerPool("uniform_random", rng=stream(5, "pool", 1))
    for i, p in enumerate((rock, paper, scissors)):
        pool.add(StaticPolicyAgent(VIEW3, p, stream(0, "l", i)))
    counts = np.zeros(3)
    n = 3000
    for ep in range(n):
        counts[pool.next_partner(ep)[1]] += 1
    assert np.abs(counts / n - 1 / 3).max() < 0.03


def test_pools_do_not_share_state(rock):
    a = PartnerPool("round_robin")
    b = PartnerPool("round_robin")
    a.add(StaticPolicyAgent(VIEW3, rock, stream(0, "m")))
    assert len(b) == 0
    with pytest.raises(MissingPartner):
        next_partner(b, 0)


def test_module_next_partner_returns_agent(rock):
    pool = PartnerPool("round_robin")
    agent = StaticPolicyAgent(VIEW3, rock, stream(0, "n"))
    pool.add(agent)
    assert next_partner(pool, 3) is agent
