"""Execute one validated RunConfig and write its artifacts.

Artifact layout under the output directory:
    train/adapt: ego.pnrlpol, seat<N>.p<K>.pnrlpol (learning partners),
                 final_episode.pnrltrj, metrics.jsonl, stats.json
    eval:        eval.json
    crossplay:   crossplay.json

Everything written here is deterministic for a fixed config + seed:
metric lines use the canonical form (no wall-clock, no job id) and JSON
files use sorted keys.
"""

from __future__ import annotations

import json
import os

from . import config as cfgmod
from . import learners, persistence
from .agents import AgentRole, LearningAgent, StaticPolicyAgent
from .env import JointEnv, project
from .envs_builtin import make_builtin
from .metrics import MetricLog
from .orchestrator import TrainingSession, cross_play, evaluate
from .rng import stream


def _build_learning_agent(spec: cfgmod.AgentSpec, view, master_seed: int, labels, role):
    hp = spec.hyperparams()
    rng = stream(master_seed, "agent", *labels)
    params = None
    if spec.path is not None:
        loaded, _ = persistence.load_policy(spec.path, view=view)
        params = _adopt_params(loaded, spec.algo, view, rng, hp)
    agent = LearningAgent(
        view,
        spec.algo,
        rng,
        hp=hp,
        params=params,
        batch_size=spec.batch,
        policy=spec.policy,
        role=role,
    )
    return agent


def _adopt_params(loaded, algo: str, view, rng, hp) -> learners.PolicyParams:
    """Warm-start parameters under a possibly different algorithm."""
    algo = learners.resolve_algo(algo)
    params = learners.copy_params(loaded)
    if params.algo == algo:
        if isinstance(params, learners.TableParams) and params.algo == learners.Q:
            params.eps = hp.eps
        return params
    if isinstance(params, learners.TableParams):
        fresh = learners.init_params(algo, view, rng, policy="table", eps=hp.eps)
        fresh.table[:] = params.table
        if algo == learners.A2C and params.vtable is not None:
            fresh.vtable[:] = params.vtable
        return fresh
    fresh = learners.init_params(algo, view, rng, policy="mlp", eps=hp.eps)
    fresh.actor[:] = params.actor
    if algo == learners.A2C and params.critic is not None:
        fresh.critic[:] = params.critic
    return fresh


def _build_agent(spec: cfgmod.AgentSpec, view, master_seed: int, labels, role):
    if spec.kind == "static":
        params, _ = persistence.load_policy(spec.path, view=view)
        return StaticPolicyAgent(view, params, stream(master_seed, "agent", *labels))
    return _build_learning_agent(spec, view, master_seed, labels, role)


def _static_for_eval(spec: cfgmod.AgentSpec, view, master_seed: int, labels):
    """Evaluation seats are always frozen; config validation guarantees a
    policy file path on every eval agent spec."""
    params, _ = persistence.load_policy(spec.path, view=view)
    return StaticPolicyAgent(view, params, stream(master_seed, "agent", *labels))


def _write_json(path: str, obj: dict) -> None:
    data = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    with open(path, "w") as f:
        f.write(data)


def run_config(cfg: cfgmod.RunConfig, out_dir: str, cancel_check=None, metrics_sink=None, job_id=None) -> dict:
    """Run the configured workflow; returns a result summary with artifact paths."""
    os.makedirs(out_dir, exist_ok=True)
    env = make_builtin(cfg.env_id)
    if cfg.mode in (cfgmod.TRAIN, cfgmod.ADAPT):
        return _run_training(cfg, env, out_dir, cancel_check, metrics_sink, job_id)
    if cfg.mode == cfgmod.EVAL:
        return _run_eval(cfg, env, out_dir)
    return _run_crossplay(cfg, env, out_dir)


def _run_training(cfg, env: JointEnv, out_dir, cancel_check, metrics_sink, job_id) -> dict:
    ego = _build_agent(cfg.ego, project(env.spec, 0), cfg.master_seed, (0, 0), AgentRole.EGO)
    metrics = MetricLog(env.spec.n_agents, sink=metrics_sink, job_id=job_id)
    session = TrainingSession(
        env,
        ego,
        total_timesteps=cfg.total_timesteps,
        master_seed=cfg.master_seed,
        mode=cfg.mode,
        metrics=metrics,
        cancel_check=cancel_check,
    )
    learning_partners = []
    for seat_cfg in cfg.seats:
        session.set_sampling(seat_cfg.seat, seat_cfg.sampling)
        for k, aspec in enumerate(seat_cfg.agents):
            agent = _build_agent(aspec, project(env.spec, seat_cfg.seat), cfg.master_seed, (seat_cfg.seat, k), AgentRole.PARTNER)
            session.add_partner_agent(seat_cfg.seat, agent)
            if isinstance(agent, LearningAgent):
                learning_partners.append((seat_cfg.seat, k, agent))

    stats = session.learn()

    artifacts = []
    hp_meta = {"hp": cfg.ego.hyperparams().as_dict(), "algo": cfg.ego.algo}
    ego_path = os.path.join(out_dir, "ego.pnrlpol")
    persistence.save_policy(ego.params, hp_meta, ego_path)
    artifacts.append(ego_path)
    for seat, k, agent in learning_partners:
        p = os.path.join(out_dir, f"seat{seat}.p{k}.pnrlpol")
        persistence.save_policy(agent.params, {"hp": agent.hp.as_dict(), "algo": agent.algo}, p)
        artifacts.append(p)
    if session.last_episode_steps:
        tpath = os.path.join(out_dir, "final_episode.pnrltrj")
        persistence.save_trajectory(
            session.last_episode_steps, env.spec, tpath, {"episode": stats.episodes - 1}
        )
        artifacts.append(tpath)
    mpath = os.path.join(out_dir, "metrics.jsonl")
    with open(mpath, "w") as f:
        for line in metrics.canonical_lines():
            f.write(line + "\n")
    artifacts.append(mpath)
    spath = os.path.join(out_dir, "stats.json")
    _write_json(spath, stats.as_dict())
    artifacts.append(spath)
    return {
        "mode": cfg.mode,
        "cancelled": stats.cancelled,
        "env_steps": stats.env_steps,
        "episodes": stats.episodes,
        "update_counts": dict(sorted(stats.update_counts.items())),
        "artifacts": artifacts,
    }


def _run_eval(cfg, env: JointEnv, out_dir) -> dict:
    agents = [_static_for_eval(cfg.ego, project(env.spec, 0), cfg.master_seed, (0, 0))]
    for seat_cfg in cfg.seats:
        agents.append(
            _static_for_eval(
                seat_cfg.agents[0], project(env.spec, seat_cfg.seat), cfg.master_seed, (seat_cfg.seat, 0)
            )
        )
    res = evaluate(env, agents, cfg.eval_episodes, cfg.master_seed)
    out = {"mode": cfgmod.EVAL, "env_id": cfg.env_id, **res.as_dict()}
    path = os.path.join(out_dir, "eval.json")
    _write_json(path, out)
    out["artifacts"] = [path]
    return out


def _run_crossplay(cfg, env: JointEnv, out_dir) -> dict:
    entries = []
    for p in cfg.crossplay_policies:
        params, _ = persistence.load_policy(p)
        entries.append((os.path.basename(p), params))
    matrix = cross_play(entries, env, cfg.eval_episodes, cfg.master_seed)
    out = {"mode": cfgmod.CROSSPLAY, "env_id": cfg.env_id, **matrix.as_dict()}
    path = os.path.join(out_dir, "crossplay.json")
    _write_json(path, out)
    out["artifacts"] = [path]
    return out
