"""Run configuration: one schema shared by CLI config files, the HTTP API,
and the job store.

Agent spec strings:
    "static:<policy-file>"
    "learn:<algo>"
    "learn:<algo>:<k=v,k=v,...>"   overrides: lr, gamma, gae_lambda,
                                   entropy_coef, value_coef, eps, batch,
                                   policy=table|mlp, init=<policy-file>
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import learners
from .agents import SAMPLING_MODES, ROUND_ROBIN
from .envs_builtin import REGISTRY
from .errors import ConfigFieldError, InvalidConfig

TRAIN = "train"
ADAPT = "adapt"
EVAL = "eval"
CROSSPLAY = "crossplay"
MODES = (TRAIN, ADAPT, EVAL, CROSSPLAY)

_FLOAT_KEYS = ("lr", "gamma", "gae_lambda", "entropy_coef", "value_coef", "eps")


@dataclass
class AgentSpec:
    kind: str                      # "static" | "learn"
    path: str | None = None        # static: policy file; learn: init override
    algo: str | None = None
    overrides: dict = field(default_factory=dict)
    batch: int | None = None
    policy: str = "auto"

    def as_string(self) -> str:
        if self.kind == "static":
            return f"static:{self.path}"
        parts = [f"{k}={v}" for k, v in sorted(self.overrides.items())]
        if self.batch is not None:
            parts.append(f"batch={self.batch}")
        if self.policy != "auto":
            parts.append(f"policy={self.policy}")
        if self.path is not None:
            parts.append(f"init={self.path}")
        tail = f":{','.join(parts)}" if parts else ""
        return f"learn:{self.algo}{tail}"

    def hyperparams(self) -> learners.Hyperparams:
        return learners.Hyperparams(**self.overrides)


def parse_agent_spec(raw, where: str, errors: list) -> AgentSpec | None:
    if not isinstance(raw, str) or not raw:
        errors.append(ConfigFieldError(where, "agent spec must be a non-empty string"))
        return None
    head, _, rest = raw.partition(":")
    if head == "static":
        if not rest:
            errors.append(ConfigFieldError(where, "static agent needs a policy file path"))
            return None
        return AgentSpec(kind="static", path=rest)
    if head != "learn":
        errors.append(ConfigFieldError(where, f"unknown agent kind {head!r} (want static/learn)"))
        return None
    algo, _, opts = rest.partition(":")
    try:
        algo = learners.resolve_algo(algo)
    except ValueError as e:
        errors.append(ConfigFieldError(where, str(e)))
        return None
    spec = AgentSpec(kind="learn", algo=algo)
    if opts:
        for item in opts.split(","):
            if not item:
                continue
            k, sep, v = item.partition("=")
            if not sep:
                errors.append(ConfigFieldError(where, f"override {item!r} is not key=value"))
                continue
            if k in _FLOAT_KEYS:
                try:
                    spec.overrides[k] = float(v)
                except ValueError:
                    errors.append(ConfigFieldError(where, f"override {k}={v!r} is not a number"))
            elif k == "batch":
                try:
                    spec.batch = int(v)
                    if spec.batch < 1:
                        raise ValueError
                except ValueError:
                    errors.append(ConfigFieldError(where, f"batch={v!r} is not a positive integer"))
            elif k == "policy":
                if v not in ("table", "mlp", "auto"):
                    errors.append(ConfigFieldError(where, f"policy={v!r} (want table/mlp)"))
                else:
                    spec.policy = v
            elif k == "init":
                spec.path = v
            else:
                errors.append(ConfigFieldError(where, f"unknown override key {k!r}"))
    if spec.kind == "learn" and spec.overrides:
        try:
            spec.hyperparams()
        except ValueError as e:
            errors.append(ConfigFieldError(where, str(e)))
    return spec


@dataclass
class SeatConfig:
    seat: int
    sampling: str
    agents: list  # of AgentSpec


@dataclass
class RunConfig:
    mode: str
    env_id: str
    master_seed: int
    total_timesteps: int = 0
    eval_episodes: int = 100
    ego: AgentSpec | None = None
    seats: list = field(default_factory=list)
    crossplay_policies: list = field(default_factory=list)
    out_dir: str | None = None

    def as_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "env_id": self.env_id,
            "master_seed": self.master_seed,
        }
        if self.mode in (TRAIN, ADAPT):
            d["total_timesteps"] = self.total_timesteps
        if self.mode in (EVAL, CROSSPLAY):
            d["eval_episodes"] = self.eval_episodes
        if self.ego is not None:
            d["ego"] = {"agent": self.ego.as_string()}
        if self.seats:
            d["seats"] = [
                {"seat": s.seat, "sampling": s.sampling, "agents": [a.as_string() for a in s.agents]}
                for s in self.seats
            ]
        if self.crossplay_policies:
            d["crossplay"] = {"policies": list(self.crossplay_policies)}
        if self.out_dir is not None:
            d["out_dir"] = self.out_dir
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))


def load_config_file(path: str) -> dict:
    if path.endswith(".json"):
        with open(path, "rb") as f:
            return json.load(f)
    with open(path, "rb") as f:
        return tomllib.load(f)


def validate_config(d: dict) -> RunConfig:
    """Full field-level validation; raises InvalidConfig listing every problem."""
    errors: list[ConfigFieldError] = []
    if not isinstance(d, dict):
        raise InvalidConfig([ConfigFieldError("", "config must be a table/object")])

    mode = d.get("mode")
    if mode not in MODES:
        errors.append(ConfigFieldError("mode", f"must be one of {', '.join(MODES)}"))
        raise InvalidConfig(errors)

    env_id = d.get("env_id")
    spec = None
    if not isinstance(env_id, str) or env_id not in REGISTRY:
        errors.append(ConfigFieldError("env_id", f"unknown environment {env_id!r}"))
    else:
        spec = REGISTRY.make(env_id).spec

    seed = d.get("master_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append(ConfigFieldError("master_seed", "must be a non-negative integer"))
        seed = 0

    cfg = RunConfig(mode=mode, env_id=env_id if isinstance(env_id, str) else "", master_seed=seed)
    cfg.out_dir = d.get("out_dir")
    if cfg.out_dir is not None and not isinstance(cfg.out_dir, str):
        errors.append(ConfigFieldError("out_dir", "must be a string path"))
        cfg.out_dir = None

    if mode in (TRAIN, ADAPT):
        ts = d.get("total_timesteps")
        if not isinstance(ts, int) or isinstance(ts, bool) or ts < 1:
            errors.append(ConfigFieldError("total_timesteps", "must be an integer >= 1"))
        else:
            cfg.total_timesteps = ts
    if mode in (EVAL, CROSSPLAY):
        ep = d.get("eval_episodes", 100)
        if not isinstance(ep, int) or isinstance(ep, bool) or ep < 1:
            errors.append(ConfigFieldError("eval_episodes", "must be an integer >= 1"))
        else:
            cfg.eval_episodes = ep

    if mode == CROSSPLAY:
        pol = d.get("crossplay", {})
        policies = pol.get("policies") if isinstance(pol, dict) else None
        if not isinstance(policies, list) or len(policies) < 2 or not all(isinstance(p, str) for p in policies):
            errors.append(ConfigFieldError("crossplay.policies", "need a list of >= 2 policy file paths"))
        else:
            cfg.crossplay_policies = policies
        if spec is not None and spec.n_agents != 2:
            errors.append(ConfigFieldError("env_id", "cross-play needs a 2-agent environment"))
        if errors:
            raise InvalidConfig(errors)
        return cfg

    ego_d = d.get("ego")
    if not isinstance(ego_d, dict) or "agent" not in ego_d:
        errors.append(ConfigFieldError("ego.agent", "required"))
    else:
        cfg.ego = parse_agent_spec(ego_d["agent"], "ego.agent", errors)

    if cfg.ego is not None:
        if mode in (TRAIN, ADAPT) and cfg.ego.kind != "learn":
            errors.append(ConfigFieldError("ego.agent", f"{mode} mode requires a learnable ego"))
        if mode == ADAPT and cfg.ego.kind == "learn" and cfg.ego.path is None:
            errors.append(ConfigFieldError("ego.agent", "adapt mode requires init=<policy-file> on the ego"))

    n_seats = spec.n_agents - 1 if spec is not None else None
    seats_d = d.get("seats", [])
    if not isinstance(seats_d, list):
        errors.append(ConfigFieldError("seats", "must be an array of seat tables"))
        seats_d = []
    seen = set()
    for k, sd in enumerate(seats_d):
        where = f"seats[{k}]"
        if not isinstance(sd, dict):
            errors.append(ConfigFieldError(where, "must be a table"))
            continue
        seat = sd.get("seat")
        if not isinstance(seat, int) or isinstance(seat, bool) or seat < 1:
            errors.append(ConfigFieldError(f"{where}.seat", "must be an integer >= 1"))
            continue
        if n_seats is not None and seat > n_seats:
            errors.append(ConfigFieldError(f"{where}.seat", f"env has partner seats 1..{n_seats}"))
            continue
        if seat in seen:
            errors.append(ConfigFieldError(f"{where}.seat", f"seat {seat} configured twice"))
            continue
        seen.add(seat)
        sampling = sd.get("sampling", ROUND_ROBIN)
        if sampling not in SAMPLING_MODES:
            errors.append(ConfigFieldError(f"{where}.sampling", f"must be one of {', '.join(SAMPLING_MODES)}"))
            sampling = ROUND_ROBIN
        agents_raw = sd.get("agents")
        if not isinstance(agents_raw, list) or not agents_raw:
            errors.append(ConfigFieldError(f"{where}.agents", "need at least one agent spec"))
            continue
        agents = []
        for j, a in enumerate(agents_raw):
            parsed = parse_agent_spec(a, f"{where}.agents[{j}]", errors)
            if parsed is not None:
                agents.append(parsed)
                if mode == ADAPT and parsed.kind != "static":
                    errors.append(
                        ConfigFieldError(f"{where}.agents[{j}]", "adapt mode requires static partners")
                    )
                if mode == EVAL and parsed.kind == "learn" and parsed.path is None:
                    errors.append(
                        ConfigFieldError(f"{where}.agents[{j}]", "eval mode needs static or init= agents")
                    )
        if mode == EVAL and len(agents) > 1:
            errors.append(ConfigFieldError(f"{where}.agents", "eval mode takes exactly one agent per seat"))
        cfg.seats.append(SeatConfig(seat=seat, sampling=sampling, agents=agents))

    if n_seats is not None:
        missing = sorted(set(range(1, n_seats + 1)) - seen)
        if missing:
            errors.append(ConfigFieldError("seats", f"missing configuration for seats {missing}"))
    if mode == EVAL and cfg.ego is not None and cfg.ego.kind == "learn" and cfg.ego.path is None:
        errors.append(ConfigFieldError("ego.agent", "eval mode needs a static or init= ego"))

    if errors:
        raise InvalidConfig(errors)
    cfg.seats.sort(key=lambda s: s.seat)
    return cfg
