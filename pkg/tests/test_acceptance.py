"""End-to-end checks for the guarantees the package advertises.

Every test here exercises a full workflow (not a unit) and appends one
PASS/FAIL line to the acceptance report that conftest prints after the
run.  Stated runtime budgets are enforced, so a pathological slowdown
fails the suite even if the numbers come out right.
"""

import functools
import json
import os
import socket
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, Echo3Env, constant_policy
from test_learners import gae_oracle, random_batch

from pnrl import config as cfgmod
from pnrl import learners
from pnrl.agents import LearningAgent, StaticPolicyAgent
from pnrl.env import REGISTRY, ProjectedView, project
from pnrl.envs_builtin import rps_payoff
from pnrl.errors import ChecksumMismatch
from pnrl.orchestrator import ADAPT, TrainingSession, cross_play
from pnrl.persistence import load_policy, load_trajectory, save_policy, save_trajectory
from pnrl.rng import stream
from pnrl.runner import run_config
from pnrl.service.api import create_app
from pnrl.spaces import SpaceSpec


def criterion(name, budget=None):
    """Wrap a test so it reports one summary line and honors a time budget."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            t0 = time.monotonic()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                ACCEPTANCE_LINES.append(f"FAIL  {name}: {type(exc).__name__}: {exc}")
                raise
            dt = time.monotonic() - t0
            if budget is not None and dt >= budget:
                ACCEPTANCE_LINES.append(f"FAIL  {name}: runtime {dt:.1f}s over the {budget:.0f}s budget")
                raise AssertionError(f"{name} took {dt:.1f}s, budget is {budget}s")
            stamp = f"{dt:.1f}s" if budget is None else f"{dt:.1f}s < {budget:.0f}s"
            ACCEPTANCE_LINES.append(f"PASS  {name}: {detail} [{stamp}]")

        return wrapper

    return deco


# -- shared trajectory ------------------------------------------------------


class TraceEnv:
    """Pass-through wrapper that logs every reset and joint step."""

    def __init__(self, inner):
        self.inner = inner
        self.spec = inner.spec
        self.step_count = 0
        self.reset_obs = []
        self.steps = []

    def reset(self, seed=None):
        obs = self.inner.reset(seed=seed)
        self.reset_obs.append(obs)
        return obs

    def step(self, actions):
        js = self.inner.step(actions)
        self.step_count += 1
        self.steps.append(js)
        return js


class TapAgent(LearningAgent):
    """Learning agent that keeps a copy of every transition it is fed."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.seen = []

    def record(self, tr):
        self.seen.append(tr)
        return super().record(tr)


@criterion("shared trajectory drives every learner", budget=5.0)
def test_shared_trajectory_feeds_all_learners():
    env = TraceEnv(Echo3Env())
    spec = env.spec
    ego = TapAgent(project(spec, 0), "q", stream(7, "ego"), batch_size=1)
    p1 = TapAgent(project(spec, 1), "q", stream(7, "p1"), batch_size=5)
    p2 = TapAgent(project(spec, 2), "q", stream(7, "p2"), batch_size=7)

    session = TrainingSession(env, ego, total_timesteps=1000, master_seed=7)
    session.add_partner_agent(1, p1)
    session.add_partner_agent(2, p2)
    stats = session.learn()

    assert env.step_count == stats.env_steps
    assert 1000 <= stats.env_steps <= 1000 + spec.horizon
    # interleaved updates really happened while the trajectory was shared
    assert ego.update_count == stats.env_steps
    assert p1.update_count == stats.env_steps // 5
    assert p2.update_count == stats.env_steps // 7

    agents = [ego, p1, p2]
    for a in agents:
        assert len(a.seen) == stats.env_steps

    episode = -1
    prev_obs = None
    for k, js in enumerate(env.steps):
        if js.t == 1:
            episode += 1
            prev_obs = env.reset_obs[episode]
        for i, agent in enumerate(agents):
            tr = agent.seen[k]
            assert tr.obs == prev_obs[i]
            assert tr.action == js.actions[i]
            assert tr.reward == js.rewards[i]
            assert tr.next_obs == js.obs[i]
            assert tr.done == js.done
        prev_obs = js.obs
    assert episode + 1 == stats.episodes

    return f"{stats.env_steps} joint steps, {3 * stats.env_steps} recorded transitions all match"


# -- round-robin coordination ----------------------------------------------


@criterion("round-robin pool converges against the static partner", budget=60.0)
def test_round_robin_partners_coordinate_with_static():
    passed = 0
    freqs = []
    for s in range(20):
        seed = 100 + s
        env = REGISTRY.make("matrix.coord")
        hp = learners.Hyperparams(lr=0.1)
        ego = LearningAgent(project(env.spec, 0), "q", stream(seed, "ego"), hp=hp)
        static = StaticPolicyAgent(project(env.spec, 1), constant_policy(2, 0), stream(seed, "static"))
        partner = LearningAgent(project(env.spec, 1), "q", stream(seed, "partner"), hp=hp)

        session = TrainingSession(env, ego, total_timesteps=20_000, master_seed=seed)
        session.add_partner_agent(1, static)
        session.add_partner_agent(1, partner)
        stats = session.learn()

        assert static.frozen_hash == learners.param_hash(static.params)
        assert stats.update_counts["seat1.p1"] > 0

        chosen = {ep: idx for ep, _, idx in stats.selection_log}
        window = range(stats.episodes - 500, stats.episodes)
        # joint (A, A) pays exactly 1.0, every other joint action pays less
        hits = [stats.episode_returns[ep][0] == 1.0 for ep in window if chosen[ep] == 0]
        freq = sum(hits) / len(hits)
        freqs.append(freq)
        if freq >= 0.9:
            passed += 1

    assert passed >= 18, f"only {passed}/20 seeds coordinated, freqs={freqs}"
    return f"{passed}/20 seeds with (A,A) frequency >= 0.9 (min {min(freqs):.3f})"


# -- adaptation against a frozen opponent ------------------------------------


@criterion("ego adapts to an all-Rock partner", budget=30.0)
def test_ego_adapts_to_frozen_rock():
    env = REGISTRY.make("rps")
    ego = LearningAgent(project(env.spec, 0), "q", stream(13, "ego"), hp=learners.Hyperparams(lr=0.1))
    rock = StaticPolicyAgent(project(env.spec, 1), constant_policy(3, 0), stream(13, "rock"))

    session = TrainingSession(env, ego, total_timesteps=10_000, master_seed=13, mode=ADAPT)
    session.add_partner_agent(1, rock)
    stats = session.learn()

    obs0 = env.reset(seed=0)[0]
    dist = learners.action_distribution(ego.params, obs0)
    tail = [r[0] for r in stats.episode_returns[-1000:]]
    mean_tail = float(np.mean(tail))

    assert dist[1] >= 0.9, f"Paper probability {dist[1]:.4f}"
    assert mean_tail >= 0.85, f"tail mean return {mean_tail:.4f}"
    assert stats.update_counts["ego"] > 0
    assert stats.update_counts["seat1.p0"] == 0
    assert rock.frozen_hash == learners.param_hash(rock.params)

    return f"Paper prob {dist[1]:.4f}, tail mean return {mean_tail:.3f}, partner untouched"


# -- cooperative handoff ------------------------------------------------------


@criterion("actor-critic pair learns the counter handoff", budget=300.0)
def test_kitchen_pair_learns_handoff():
    per_seed = []
    for seed in range(10):
        env = REGISTRY.make("kitchen.pass")
        ego = LearningAgent(project(env.spec, 0), "a2c", stream(seed, "ego"))
        partner = LearningAgent(project(env.spec, 1), "a2c", stream(seed, "partner"))
        session = TrainingSession(env, ego, total_timesteps=100_000, master_seed=seed)
        session.add_partner_agent(1, partner)
        stats = session.learn()
        tail = [r[0] for r in stats.episode_returns[-100:]]
        per_seed.append(float(np.mean(tail)))

    passed = sum(m >= 7.0 for m in per_seed)
    assert passed >= 7, f"only {passed}/10 seeds reached 7.0: {per_seed}"
    return f"{passed}/10 seeds with final-100-episode mean >= 7.0 (range {min(per_seed):.2f}..{max(per_seed):.2f})"


# -- gradient oracle ----------------------------------------------------------


def _fd_every_coordinate(params, batch, hp, h=1e-5):
    """Max relative error between analytic and central-difference gradients."""
    returns, advantages = learners.compute_targets(params, batch, hp)
    grads = learners.surrogate_gradient(params, batch, advantages, returns, hp)
    analytic = np.concatenate([g.ravel() for g in grads])
    worst = 0.0
    k = 0
    for arr in learners.payload_arrays(params):
        flat = arr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = learners.surrogate_objective(params, batch, advantages, returns, hp)
            flat[i] = orig - h
            lo = learners.surrogate_objective(params, batch, advantages, returns, hp)
            flat[i] = orig
            fd = (hi - lo) / (2.0 * h)
            err = abs(analytic[k] - fd) / max(1.0, abs(fd), abs(analytic[k]))
            worst = max(worst, err)
            k += 1
    assert k == analytic.size
    return worst


def _random_hp(rng):
    return learners.Hyperparams(
        gamma=float(rng.uniform(0.9, 1.0)),
        gae_lambda=float(rng.uniform(0.0, 1.0)),
        entropy_coef=float(rng.uniform(0.0, 0.05)),
        value_coef=float(rng.uniform(0.1, 1.0)),
    )


@criterion("analytic gradients match finite differences everywhere")
def test_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(501)
    worst = 0.0
    checked = 0

    # table policies: 100 instances, the first 25 on the minimal 1x5 shape
    for idx in range(100):
        algo = "reinforce" if idx < 50 else "a2c"
        if idx < 25:
            n_s, n_a = 1, 5
        else:
            n_s = int(rng.integers(1, 5))
            n_a = int(rng.integers(2, 6))
        view = ProjectedView(0, SpaceSpec.discrete(n_s), SpaceSpec.discrete(n_a))
        params = learners.init_params(algo, view, rng, policy="table")
        for arr in learners.payload_arrays(params):
            arr[:] = rng.normal(0.0, 1.0, arr.shape)
        batch = random_batch(rng, n_s, n_a, int(rng.integers(3, 9)))
        err = _fd_every_coordinate(params, batch, _random_hp(rng))
        assert err < 1e-4, f"table {algo} instance {idx}: rel err {err:.2e}"
        worst = max(worst, err)
        checked += 1

    # mlp policies: 100 instances over box observations
    view = ProjectedView(0, SpaceSpec.box([-2.0, -2.0], [2.0, 2.0]), SpaceSpec.discrete(2))
    for idx in range(100):
        algo = "reinforce" if idx < 50 else "a2c"
        params = learners.init_params(algo, view, rng)
        batch = random_batch(rng, 0, 2, int(rng.integers(3, 7)), box_dim=2)
        err = _fd_every_coordinate(params, batch, _random_hp(rng))
        assert err < 1e-4, f"mlp {algo} instance {idx}: rel err {err:.2e}"
        worst = max(worst, err)
        checked += 1

    return f"{checked} instances, every coordinate, worst rel err {worst:.2e}"


# -- advantage estimator oracle ----------------------------------------------


@criterion("advantage recursion matches the double-loop definition")
def test_advantage_recursion_matches_double_loop():
    rng = np.random.default_rng(1234)
    worst = 0.0
    for _ in range(1000):
        t_len = int(rng.integers(1, 26))
        rewards = rng.normal(size=t_len).tolist()
        dones = (rng.random(t_len) < 0.25).tolist()
        values = rng.normal(size=t_len + 1).tolist()
        gamma = float(rng.uniform(0.9, 1.0))
        lam = float(rng.uniform(0.0, 1.0))
        ret, adv = learners.returns_and_advantages(rewards, dones, values, gamma, lam)
        oret, oadv = gae_oracle(rewards, dones, values, gamma, lam)
        worst = max(
            worst,
            float(np.max(np.abs(np.asarray(adv) - oadv))),
            float(np.max(np.abs(np.asarray(ret) - oret))),
        )
    assert worst <= 1e-12, f"worst deviation {worst:.3e}"
    return f"1000 random trajectories, worst deviation {worst:.1e}"


# -- cross-play exactness ------------------------------------------------------


@criterion("cross-play reproduces the cyclic payoff matrix exactly")
def test_cross_play_reproduces_payoff_matrix():
    env = REGISTRY.make("rps")
    entries = [
        ("rock", constant_policy(3, 0)),
        ("paper", constant_policy(3, 1)),
        ("scissors", constant_policy(3, 2)),
    ]
    mat = cross_play(entries, env, eval_episodes=30, master_seed=5)
    for i in range(3):
        for j in range(3):
            want = rps_payoff(i, j)
            assert mat.returns[i][j][0] == want
            assert mat.returns[i][j][1] == -want
            assert mat.returns[i][j][0] == -mat.returns[j][i][0]
    return "3x3 matrix exact, antisymmetry exact"


# -- determinism ---------------------------------------------------------------


def _run_pair(cfg_dict, base, tag):
    a = base / f"{tag}_a"
    b = base / f"{tag}_b"
    run_config(cfgmod.validate_config(cfg_dict), str(a))
    run_config(cfgmod.validate_config(cfg_dict), str(b))
    names_a = sorted(os.listdir(a))
    names_b = sorted(os.listdir(b))
    assert names_a == names_b
    for name in names_a:
        pa = (a / name).read_bytes()
        pb = (b / name).read_bytes()
        assert pa == pb, f"{tag}/{name} differs between identically seeded runs"
    return len(names_a)


@criterion("same-seed runs produce byte-identical artifacts")
def test_same_seed_runs_are_byte_identical(tmp_path):
    rps_cfg = {
        "mode": "train",
        "env_id": "rps",
        "master_seed": 11,
        "total_timesteps": 1000,
        "ego": {"agent": "learn:q:lr=0.1"},
        "seats": [{"seat": 1, "agents": ["learn:q:lr=0.1"]}],
    }
    kitchen_cfg = {
        "mode": "train",
        "env_id": "kitchen.pass",
        "master_seed": 3,
        "total_timesteps": 4000,
        "ego": {"agent": "learn:a2c"},
        "seats": [{"seat": 1, "agents": ["learn:a2c"]}],
    }
    n1 = _run_pair(rps_cfg, tmp_path, "rps")
    n2 = _run_pair(kitchen_cfg, tmp_path, "kitchen")
    return f"{n1 + n2} artifacts compared (policies, trajectories, metric streams, stats)"


# -- persistence ---------------------------------------------------------------


def _random_policy(rng):
    if rng.random() < 0.7:
        n_s = int(rng.integers(1, 7))
        n_a = int(rng.integers(2, 7))
        algo = ["q", "reinforce", "a2c"][int(rng.integers(3))]
        view = ProjectedView(0, SpaceSpec.discrete(n_s), SpaceSpec.discrete(n_a))
        params = learners.init_params(algo, view, rng, policy="table", eps=float(rng.random()))
    else:
        dim = int(rng.integers(1, 4))
        algo = ["reinforce", "a2c"][int(rng.integers(2))]
        view = ProjectedView(0, SpaceSpec.box([-1.0] * dim, [1.0] * dim), SpaceSpec.discrete(int(rng.integers(2, 5))))
        params = learners.init_params(algo, view, rng)
    for arr in learners.payload_arrays(params):
        arr[:] = rng.normal(0.0, 3.0, arr.shape)
    return params


def _random_trajectory(rng, spec):
    from pnrl.env import JointStep

    steps = []
    for _ in range(int(rng.integers(1, 4))):
        t_len = int(rng.integers(1, spec.horizon + 1))
        for t in range(1, t_len + 1):
            obs = [int(rng.integers(5)), rng.normal(size=3)]
            steps.append(
                JointStep(
                    t=t,
                    obs=obs,
                    actions=[int(rng.integers(2)), int(rng.integers(2))],
                    rewards=[float(rng.normal()), float(rng.normal())],
                    done=(t == t_len),
                )
            )
    return steps


@criterion("save/load round-trips are bit-exact and corruption always detected")
def test_persistence_roundtrips_and_corruption(tmp_path):
    rng = np.random.default_rng(99)
    spec_dict = {
        "env_id": "synthetic.pair",
        "n_agents": 2,
        "obs_spaces": [SpaceSpec.discrete(5).as_dict(), SpaceSpec.box([-9.0] * 3, [9.0] * 3).as_dict()],
        "act_spaces": [SpaceSpec.discrete(2).as_dict(), SpaceSpec.discrete(2).as_dict()],
        "horizon": 8,
        "reward_structure": "mixed",
    }
    from pnrl.env import JointEnvSpec

    spec = JointEnvSpec.from_dict(spec_dict)

    pol_path = str(tmp_path / "rt.pnrlpol")
    trj_path = str(tmp_path / "rt.pnrltrj")
    keep_pol = []
    keep_trj = []

    for i in range(6000):
        params = _random_policy(rng)
        meta = {"i": i}
        save_policy(params, meta, pol_path)
        loaded, got_meta = load_policy(pol_path)
        assert got_meta == meta
        assert learners.param_hash(loaded) == learners.param_hash(params)
        for a, b in zip(learners.payload_arrays(loaded), learners.payload_arrays(params)):
            assert np.array_equal(a, b)
        if i < 30:
            keep_pol.append((tmp_path / f"base{i}.pnrlpol", params))
            save_policy(params, meta, str(keep_pol[-1][0]))

    for i in range(4000):
        steps = _random_trajectory(rng, spec)
        save_trajectory(steps, spec, trj_path, metadata={"i": i})
        got_steps, got_spec, got_meta = load_trajectory(trj_path)
        assert got_spec == spec
        assert got_meta == {"i": i}
        assert len(got_steps) == len(steps)
        for x, y in zip(got_steps, steps):
            assert x.t == y.t and x.done == y.done
            assert x.actions == y.actions and x.rewards == y.rewards
            assert x.obs[0] == y.obs[0]
            assert np.array_equal(x.obs[1], y.obs[1])
        if i < 20:
            keep_trj.append(tmp_path / f"base{i}.pnrltrj")
            save_trajectory(steps, spec, str(keep_trj[-1]), metadata={"i": i})

    # corruption fuzz: flip one byte anywhere (header line included)
    fuzz = str(tmp_path / "fuzz.bin")
    trials = 0
    for path, loader in [(p, load_policy) for p, _ in keep_pol] + [(p, load_trajectory) for p in keep_trj]:
        raw = bytearray(path.read_bytes())
        for _ in range(24):
            pos = int(rng.integers(len(raw)))
            mask = int(rng.integers(1, 256))
            bad = bytearray(raw)
            bad[pos] ^= mask
            with open(fuzz, "wb") as f:
                f.write(bytes(bad))
            with pytest.raises(ChecksumMismatch):
                loader(fuzz)
            trials += 1

    return f"10000 round-trips bit-exact, {trials} single-byte corruptions all rejected"


# -- service -------------------------------------------------------------------


def _free_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def _wait_ready(client, base, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            if client.get(base + "/api/catalog", timeout=2.0).status_code == 200:
                return
        except Exception:
            pass
        time.sleep(0.1)
    raise AssertionError("service did not come up")


@criterion("service respects the parallel cap and survives a hard restart", budget=120.0)
def test_service_parallelism_and_restart_recovery(tmp_path):
    from fastapi.testclient import TestClient

    def job_cfg(seed):
        return {
            "mode": "train",
            "env_id": "rps",
            "master_seed": seed,
            "total_timesteps": 3000,
            "ego": {"agent": "learn:q:lr=0.1"},
            "seats": [{"seat": 1, "agents": ["learn:q:lr=0.1"]}],
        }

    app = create_app(data_dir=str(tmp_path / "svc"), max_parallel=4)
    peak = 0
    finals = {}
    with TestClient(app) as client:
        jids = [client.post("/api/jobs", json=job_cfg(seed)).json()["job_id"] for seed in range(6)]
        deadline = time.monotonic() + 90
        while time.monotonic() < deadline:
            # one list call is an atomic snapshot; per-job GETs would not be
            jobs = {j["job_id"]: j for j in client.get("/api/jobs").json()["jobs"]}
            running = sum(j["state"] == "running" for j in jobs.values())
            peak = max(peak, running, app.state.manager.running_count())
            if all(jobs[jid]["state"] in ("succeeded", "failed", "cancelled") for jid in jids):
                finals = {jid: jobs[jid] for jid in jids}
                break
            time.sleep(0.01)

    assert finals, "jobs did not finish in time"
    assert peak <= 4, f"observed {peak} concurrent running jobs"
    assert all(j["state"] == "succeeded" for j in finals.values())

    # byte-identical to serial command-line runs of the same configs
    from pnrl.cli import main as cli_main

    compared = 0
    for seed, jid in zip(range(6), jids):
        cfg_path = tmp_path / f"cfg{seed}.json"
        cfg_path.write_text(json.dumps(job_cfg(seed)))
        serial_dir = tmp_path / f"serial{seed}"
        assert cli_main(["train", str(cfg_path), "--out-dir", str(serial_dir)]) == 0
        for art in finals[jid]["artifacts"]:
            twin = serial_dir / os.path.basename(art)
            assert twin.exists(), f"serial run missing {os.path.basename(art)}"
            assert open(art, "rb").read() == twin.read_bytes(), f"{os.path.basename(art)} differs"
            compared += 1

    # hard restart: kill the server process mid-job, bring it back up
    import httpx

    data2 = tmp_path / "svc2"
    port = _free_port()
    base = f"http://127.0.0.1:{port}"
    argv = [
        sys.executable, "-m", "pnrl.cli", "serve",
        "--port", str(port), "--data-dir", str(data2), "--max-parallel", "2",
    ]
    proc = subprocess.Popen(argv, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        with httpx.Client() as web:
            _wait_ready(web, base)
            quick = web.post(base + "/api/jobs", json=job_cfg(42)).json()
            deadline = time.monotonic() + 30
            while time.monotonic() < deadline:
                quick = web.get(base + f"/api/jobs/{quick['job_id']}").json()
                if quick["state"] == "succeeded":
                    break
                time.sleep(0.05)
            assert quick["state"] == "succeeded"

            longcfg = {
                "mode": "train",
                "env_id": "kitchen.pass",
                "master_seed": 0,
                "total_timesteps": 50_000_000,
                "ego": {"agent": "learn:a2c"},
                "seats": [{"seat": 1, "agents": ["learn:a2c"]}],
            }
            long_job = web.post(base + "/api/jobs", json=longcfg).json()
            deadline = time.monotonic() + 30
            while time.monotonic() < deadline:
                state = web.get(base + f"/api/jobs/{long_job['job_id']}").json()["state"]
                rows = web.get(base + f"/api/jobs/{long_job['job_id']}/metrics?after=0").json()["rows"]
                if state == "running" and len(rows) > 0:
                    break
                time.sleep(0.1)
            assert state == "running" and len(rows) > 0, "long job never started producing metrics"
    finally:
        proc.kill()
        proc.wait()

    proc = subprocess.Popen(argv, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        with httpx.Client() as web:
            _wait_ready(web, base)
            revived = web.get(base + f"/api/jobs/{long_job['job_id']}").json()
            assert revived["state"] == "failed"
            assert revived["error"] == "interrupted"
            survivor = web.get(base + f"/api/jobs/{quick['job_id']}").json()
            assert survivor["state"] == "succeeded"
            for art in survivor["artifacts"]:
                assert os.path.getsize(art) > 0
    finally:
        proc.kill()
        proc.wait()

    return f"peak running {peak}/4, {compared} artifacts byte-identical to serial runs, restart marked the interrupted job failed"
