"""Ego-driven training loop and interaction schedules.

One session owns one environment and one agent per seat (seat 0 is the
ego; seats >= 1 hold partner pools resampled at episode boundaries).  The
environment is stepped exactly once per joint timestep and every learning
agent's buffer is fed from that single trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import learners
from .agents import (
    ROUND_ROBIN,
    Agent,
    LearningAgent,
    PartnerPool,
    StaticPolicyAgent,
    Transition,
)
from .env import JointEnv, JointStep, project
from .errors import MissingPartner, SpaceMismatch, UpdatesEnabledInEval
from .metrics import MetricLog
from .rng import derive_seed, stream

TRAIN = "train"
ADAPT = "adapt"
AD_HOC_EVAL = "eval"
CROSS_PLAY = "crossplay"
MODES = (TRAIN, ADAPT, AD_HOC_EVAL, CROSS_PLAY)


@dataclass
class SessionStats:
    env_steps: int = 0
    episodes: int = 0
    update_counts: dict = field(default_factory=dict)
    episode_returns: list = field(default_factory=list)
    selection_log: list = field(default_factory=list)
    cancelled: bool = False

    def as_dict(self) -> dict:
        return {
            "env_steps": self.env_steps,
            "episodes": self.episodes,
            "update_counts": dict(sorted(self.update_counts.items())),
            "episode_returns": self.episode_returns,
            "selection_log": [list(x) for x in self.selection_log],
            "cancelled": self.cancelled,
        }


def check_view(agent: Agent, env: JointEnv, seat: int) -> None:
    want = project(env.spec, seat)
    have = agent.view
    if have.obs_space != want.obs_space or have.act_space != want.act_space:
        raise SpaceMismatch(
            f"seat {seat} expects obs {want.obs_space}, act {want.act_space}; "
            f"agent has obs {have.obs_space}, act {have.act_space}"
        )


def run_episode(env: JointEnv, agents: list, seed=None, record: bool = True, on_update=None):
    """Play one full episode; returns the list of JointSteps.

    Each agent acts on its own projected observation; transitions are
    delivered to the agents in step order.
    """
    obs = env.reset(seed=seed)
    steps: list[JointStep] = []
    done = False
    while not done:
        actions = []
        log_probs = []
        for i, agent in enumerate(agents):
            a, lp = agent.act(obs[i])
            actions.append(a)
            log_probs.append(lp)
        js = env.step(actions)
        steps.append(js)
        done = js.done
        if record:
            for i, agent in enumerate(agents):
                report = agent.record(
                    Transition(
                        obs=obs[i],
                        action=actions[i],
                        reward=js.rewards[i],
                        next_obs=js.obs[i],
                        done=js.done,
                        log_prob=log_probs[i],
                    )
                )
                if report is not None and on_update is not None:
                    on_update(i, js.t, report)
        obs = js.obs
    return steps


class TrainingSession:
    """Binds an env, an ego, and per-seat partner pools for one run."""

    def __init__(
        self,
        env: JointEnv,
        ego: Agent,
        total_timesteps: int,
        master_seed: int,
        mode: str = TRAIN,
        metrics: MetricLog | None = None,
        cancel_check=None,
    ):
        if mode not in (TRAIN, ADAPT):
            raise ValueError(f"training session mode must be train or adapt, got {mode!r}")
        if total_timesteps < 1:
            raise ValueError("total_timesteps must be >= 1")
        check_view(ego, env, 0)
        self.env = env
        self.ego = ego
        self.mode = mode
        self.total_timesteps = total_timesteps
        self.master_seed = master_seed
        self.pools: dict[int, PartnerPool] = {
            seat: PartnerPool(ROUND_ROBIN, rng=stream(master_seed, "pool", seat))
            for seat in range(1, env.spec.n_agents)
        }
        self.metrics = metrics if metrics is not None else MetricLog(env.spec.n_agents)
        self.cancel_check = cancel_check
        self.stats = SessionStats()
        self.last_episode_steps: list[JointStep] = []

    def set_sampling(self, seat: int, sampling: str) -> None:
        self.pools[seat].sampling = sampling

    def add_partner_agent(self, seat: int, agent: Agent) -> None:
        if seat < 1 or seat >= self.env.spec.n_agents:
            raise SpaceMismatch(f"seat {seat} is not a partner seat (1..{self.env.spec.n_agents - 1})")
        check_view(agent, self.env, seat)
        self.pools[seat].add(agent)

    def _agent_key(self, seat: int, pool_index: int | None) -> str:
        return "ego" if seat == 0 else f"seat{seat}.p{pool_index}"

    def learn(self) -> SessionStats:
        """Run episodes until the joint step budget is spent.

        The in-flight episode always completes, so the final step count may
        overshoot by at most one horizon.
        """
        for seat, pool in self.pools.items():
            if len(pool) == 0:
                raise MissingPartner(f"no partner agent added for seat {seat}")
        n = self.env.spec.n_agents
        horizon = self.env.spec.horizon
        stats = self.stats
        while stats.env_steps < self.total_timesteps:
            if self.cancel_check is not None and self.cancel_check():
                stats.cancelled = True
                break
            ep = stats.episodes
            agents = [self.ego]
            keys = ["ego"]
            for seat in range(1, n):
                partner, idx = self.pools[seat].next_partner(ep)
                stats.selection_log.append((ep, seat, idx))
                agents.append(partner)
                keys.append(self._agent_key(seat, idx))

            sparse = [
                isinstance(a, LearningAgent) and a.buffer.capacity > horizon for a in agents
            ]
            base_step = stats.env_steps

            def on_update(seat: int, t: int, report) -> None:
                self.metrics.update_event(base_step + t, ep, seat, report)
                if sparse[seat]:
                    self.metrics.update_row(base_step + t, ep)

            steps = run_episode(
                self.env,
                agents,
                seed=derive_seed(self.master_seed, "episode", ep),
                record=True,
                on_update=on_update,
            )
            self.last_episode_steps = steps
            stats.env_steps += len(steps)
            stats.episodes += 1
            seat_returns = [float(sum(js.rewards[i] for js in steps)) for i in range(n)]
            stats.episode_returns.append(seat_returns)
            for key, agent in zip(keys, agents):
                stats.update_counts[key] = agent.update_count
            self.metrics.episode_end(stats.env_steps, ep, seat_returns)
        return stats


@dataclass
class EvalResult:
    mean_returns: list
    std_returns: list
    episodes: int

    def as_dict(self) -> dict:
        return {
            "mean_returns": self.mean_returns,
            "std_returns": self.std_returns,
            "episodes": self.episodes,
        }


def evaluate(env: JointEnv, agents: list, episodes: int, master_seed: int) -> EvalResult:
    """Zero-shot pairing: seeded episodes, no recording, no parameter drift."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    for i, agent in enumerate(agents):
        check_view(agent, env, i)
        if agent.is_learning and agent.updates_enabled:
            raise UpdatesEnabledInEval(f"agent at seat {i} has updates enabled")
    hashes = [a.param_hash() for a in agents]
    n = env.spec.n_agents
    totals = np.zeros((episodes, n))
    for k in range(episodes):
        steps = run_episode(env, agents, seed=derive_seed(master_seed, "eval", k), record=False)
        for i in range(n):
            totals[k, i] = sum(js.rewards[i] for js in steps)
    after = [a.param_hash() for a in agents]
    if after != hashes:
        raise UpdatesEnabledInEval("parameters changed during evaluation")
    return EvalResult(
        mean_returns=[float(x) for x in totals.mean(axis=0)],
        std_returns=[float(x) for x in totals.std(axis=0)],
        episodes=episodes,
    )


@dataclass
class CrossPlayMatrix:
    policy_ids: list
    episodes_per_cell: int
    returns: list  # m x m cells, each [seat0 mean, seat1 mean]

    @property
    def row_means(self) -> list:
        return [[cell[0] for cell in row] for row in self.returns]

    def as_dict(self) -> dict:
        return {
            "policy_ids": self.policy_ids,
            "episodes_per_cell": self.episodes_per_cell,
            "returns": self.returns,
            "row_means": self.row_means,
        }


def cross_play(entries: list, env: JointEnv, eval_episodes: int, master_seed: int) -> CrossPlayMatrix:
    """Evaluate every ordered policy pair; cell (i, j) seats policy i at 0
    and policy j at 1, each cell an independent seeded evaluation."""
    if len(entries) < 2:
        raise ValueError("cross-play needs at least 2 policies")
    if env.spec.n_agents != 2:
        raise SpaceMismatch("cross-play runs on 2-agent environments")
    for _, params in entries:
        for seat in range(2):
            learners_check_fit(params, env, seat)
    ids = [pid for pid, _ in entries]
    m = len(entries)
    table = []
    for i in range(m):
        row = []
        for j in range(m):
            agents = [
                StaticPolicyAgent(project(env.spec, 0), entries[i][1], stream(master_seed, "xp", i, j, 0)),
                StaticPolicyAgent(project(env.spec, 1), entries[j][1], stream(master_seed, "xp", i, j, 1)),
            ]
            res = evaluate(env, agents, eval_episodes, derive_seed(master_seed, "xp", i, j))
            row.append([res.mean_returns[0], res.mean_returns[1]])
        table.append(row)
    return CrossPlayMatrix(policy_ids=ids, episodes_per_cell=eval_episodes, returns=table)


def learners_check_fit(params, env: JointEnv, seat: int) -> None:
    """Raise SpaceMismatch when a policy cannot occupy the given seat."""
    view = project(env.spec, seat)
    if not learners.params_fit_view(params, view):
        raise SpaceMismatch(f"policy does not fit seat {seat} of {env.spec.env_id!r}")
