"""Learning algorithms: tabular Q-learning, REINFORCE, and a small actor-critic.

Everything is float64 numpy with plain SGD, so updates are bit-reproducible
and every analytic gradient can be checked against central finite
differences.  Policies over Discrete observations default to table
parameters indexed by the observation value; Box observations require the
MLP parameterization (two tanh hidden layers of 32).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .env import ProjectedView
from .errors import (
    InvalidObservation,
    LengthMismatch,
    NonFiniteGradient,
    NotSupported,
)
from .spaces import DISCRETE, SpaceSpec

Q = "q"
REINFORCE = "reinforce"
A2C = "a2c"
ALGO_IDS = (Q, REINFORCE, A2C)

# the clipped-objective slot in configs runs the actor-critic and is reported as such
ALGO_ALIASES = {"ppo": A2C}

HIDDEN = (32, 32)


def resolve_algo(algo: str) -> str:
    algo = ALGO_ALIASES.get(algo, algo)
    if algo not in ALGO_IDS:
        raise ValueError(f"unknown algorithm id {algo!r}")
    return algo


@dataclass
class Hyperparams:
    """Learner hyperparameters; defaults are tuned for the built-in games."""

    gamma: float = 0.99
    gae_lambda: float = 0.95
    lr: float = 3e-3
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    eps: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.lr <= 0.0:
            raise ValueError("lr must be > 0")
        if self.entropy_coef < 0.0 or self.value_coef < 0.0:
            raise ValueError("coefficients must be >= 0")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must be in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "gae_lambda": self.gae_lambda,
            "lr": self.lr,
            "entropy_coef": self.entropy_coef,
            "value_coef": self.value_coef,
            "eps": self.eps,
        }


@dataclass
class UpdateReport:
    policy_loss: float
    value_loss: float
    entropy: float
    grad_norm: float
    update_index: int

    def as_dict(self) -> dict:
        return {
            "policy_loss": self.policy_loss,
            "value_loss": self.value_loss,
            "entropy": self.entropy,
            "grad_norm": self.grad_norm,
            "update_index": self.update_index,
        }


@dataclass
class TableParams:
    """Table policy: one row of action preferences (or Q-values) per state."""

    algo: str
    table: np.ndarray                     # [n_states, n_actions]
    vtable: np.ndarray | None = None      # [n_states], actor-critic only
    eps: float = 0.1                      # exploration rate, Q tables only
    kind: str = field(default="table", init=False)
    _rows: list | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def n_states(self) -> int:
        return self.table.shape[0]

    @property
    def n_actions(self) -> int:
        return self.table.shape[1]

    def rows(self) -> list:
        # cached python rows for the hot sampling path; params are replaced
        # wholesale on update so the cache can never go stale
        if self._rows is None:
            self._rows = self.table.tolist()
        return self._rows


@dataclass
class MlpParams:
    """Dense tanh network: layers (obs_dim, 32, 32, n_actions), flat float64.

    The flat vector is layer-major; per layer the (fan_out, fan_in) weight
    matrix comes row-major, then the bias.  ``critic`` is a second network
    with output width 1, present for the actor-critic only.
    """

    algo: str
    layers: tuple[int, ...]
    actor: np.ndarray
    critic: np.ndarray | None = None
    eps: float = 0.1
    kind: str = field(default="mlp", init=False)

    @property
    def critic_layers(self) -> tuple[int, ...]:
        return self.layers[:-1] + (1,)

    @property
    def n_actions(self) -> int:
        return self.layers[-1]


PolicyParams = TableParams | MlpParams


def vector_length(layers: tuple[int, ...]) -> int:
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(layers[:-1], layers[1:]))


def _unflatten(flat: np.ndarray, layers: tuple[int, ...]):
    """Views (W, b) per layer into the flat vector; W is (fan_out, fan_in)."""
    out = []
    off = 0
    for fan_in, fan_out in zip(layers[:-1], layers[1:]):
        w = flat[off : off + fan_in * fan_out].reshape(fan_out, fan_in)
        off += fan_in * fan_out
        b = flat[off : off + fan_out]
        off += fan_out
        out.append((w, b))
    if off != flat.size:
        raise ValueError(f"flat vector length {flat.size} != expected {off}")
    return out


def init_params(
    algo: str,
    view: ProjectedView,
    rng: np.random.Generator,
    policy: str = "auto",
    eps: float = 0.1,
) -> PolicyParams:
    """Fresh zero-initialized table or scale-controlled random MLP."""
    algo = resolve_algo(algo)
    if view.act_space.kind != DISCRETE:
        raise NotSupported("only discrete action spaces are supported")
    n_actions = view.act_space.n
    if policy == "auto":
        policy = "table" if view.obs_space.kind == DISCRETE else "mlp"
    if policy == "table":
        if view.obs_space.kind != DISCRETE:
            raise NotSupported("box observations require the mlp policy")
        n_states = view.obs_space.n
        vtable = np.zeros(n_states) if algo == A2C else None
        return TableParams(algo=algo, table=np.zeros((n_states, n_actions)), vtable=vtable, eps=eps)
    if policy == "mlp":
        if algo == Q:
            raise NotSupported("tabular Q-learning requires table parameters")
        layers = (view.obs_space.dim, *HIDDEN, n_actions)
        actor = _init_flat(layers, rng)
        critic = _init_flat(layers[:-1] + (1,), rng) if algo == A2C else None
        return MlpParams(algo=algo, layers=layers, actor=actor, critic=critic, eps=eps)
    raise ValueError(f"unknown policy kind {policy!r}")


def _init_flat(layers: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    chunks = []
    for fan_in, fan_out in zip(layers[:-1], layers[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, size=(fan_in + 1) * fan_out))
    return np.concatenate(chunks)


def copy_params(params: PolicyParams) -> PolicyParams:
    if isinstance(params, TableParams):
        return TableParams(
            algo=params.algo,
            table=params.table.copy(),
            vtable=None if params.vtable is None else params.vtable.copy(),
            eps=params.eps,
        )
    return MlpParams(
        algo=params.algo,
        layers=params.layers,
        actor=params.actor.copy(),
        critic=None if params.critic is None else params.critic.copy(),
        eps=params.eps,
    )


def payload_arrays(params: PolicyParams) -> list[np.ndarray]:
    """Canonical parameter payload order: actor block, then critic block."""
    if isinstance(params, TableParams):
        arrays = [params.table]
        if params.vtable is not None:
            arrays.append(params.vtable)
    else:
        arrays = [params.actor]
        if params.critic is not None:
            arrays.append(params.critic)
    return arrays


def param_hash(params: PolicyParams) -> str:
    h = hashlib.sha256()
    for a in payload_arrays(params):
        h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return h.hexdigest()


def params_fit_view(params: PolicyParams, view: ProjectedView) -> bool:
    """Whether the parameter shapes can serve the seat's spaces."""
    if view.act_space.kind != DISCRETE:
        return False
    n_actions = view.act_space.n
    if isinstance(params, TableParams):
        return (
            view.obs_space.kind == DISCRETE
            and params.n_states == view.obs_space.n
            and params.n_actions == n_actions
        )
    return params.layers[0] == view.obs_space.dim and params.layers[-1] == n_actions


def encode_obs(space: SpaceSpec, obs) -> np.ndarray:
    """Network input: one-hot for discrete observations, raw vector for box."""
    if space.kind == DISCRETE:
        x = np.zeros(space.n)
        x[int(obs)] = 1.0
        return x
    return np.asarray(obs, dtype=np.float64)


def _check_obs(params: TableParams, obs) -> None:
    if not isinstance(obs, (int, np.integer)) or not 0 <= int(obs) < params.n_states:
        raise InvalidObservation(f"observation {obs!r} not a state index in [0, {params.n_states})")


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def greedy_action(qrow) -> int:
    """Argmax with lowest-index tie-breaking."""
    best = 0
    best_q = qrow[0]
    for a in range(1, len(qrow)):
        if qrow[a] > best_q:
            best, best_q = a, qrow[a]
    return best


def eps_greedy(qrow: np.ndarray, eps: float) -> np.ndarray:
    n = len(qrow)
    probs = np.full(n, eps / n)
    probs[greedy_action(qrow)] += 1.0 - eps
    return probs


def _mlp_forward(flat: np.ndarray, layers: tuple[int, ...], x: np.ndarray):
    """Batched forward pass; returns (output, hidden activations)."""
    pieces = _unflatten(flat, layers)
    h = x
    hidden = []
    for w, b in pieces[:-1]:
        h = np.tanh(h @ w.T + b)
        hidden.append(h)
    w, b = pieces[-1]
    return h @ w.T + b, hidden


def _mlp_backward(flat, layers, x, hidden, dout) -> np.ndarray:
    """Gradient of sum(dout * output) w.r.t. the flat parameter vector."""
    pieces = _unflatten(flat, layers)
    grads = [None] * len(pieces)
    acts = [x] + hidden
    d = dout
    for li in range(len(pieces) - 1, -1, -1):
        w, _ = pieces[li]
        gw = d.T @ acts[li]
        gb = d.sum(axis=0)
        grads[li] = (gw, gb)
        if li > 0:
            d = (d @ w) * (1.0 - acts[li] ** 2)
    return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])


def action_distribution(params: PolicyParams, obs, eps: float | None = None) -> np.ndarray:
    """Probability vector over actions: softmax over preferences, or
    epsilon-greedy over Q-values for tabular Q-learning."""
    if isinstance(params, TableParams):
        _check_obs(params, obs)
        row = params.table[int(obs)]
        if params.algo == Q:
            return eps_greedy(row, params.eps if eps is None else eps)
        return softmax(row)
    x = encode_obs(_mlp_obs_space(params), obs)
    if x.shape != (params.layers[0],):
        raise InvalidObservation(f"observation {obs!r} does not match input width {params.layers[0]}")
    logits, _ = _mlp_forward(params.actor, params.layers, x[None, :])
    return softmax(logits[0])


def _mlp_obs_space(params: MlpParams) -> SpaceSpec:
    # synthetic box wide enough for encode_obs; real conformance is the
    # caller's job (agents validate against their own view)
    dim = params.layers[0]
    return SpaceSpec.box([-np.inf] * dim, [np.inf] * dim)


def sample_action(params: PolicyParams, obs, rng: np.random.Generator, eps: float | None = None):
    """Draw (action, log_prob) from the policy distribution.

    Table policies take a pure-python fast path; this sits inside every
    environment step of every training run.
    """
    if isinstance(params, TableParams):
        s = obs if type(obs) is int else int(obs)
        if not 0 <= s < params.n_states:
            raise InvalidObservation(f"observation {obs!r} not a state index")
        row = params.rows()[s]
        if params.algo == Q:
            e = params.eps if eps is None else eps
            a = greedy_action(row)
            if e > 0.0:
                u = rng.random()
                if u < e:
                    a_expl = int(rng.integers(len(row)))
                    p = e / len(row) + (1.0 - e if a_expl == a else 0.0)
                    return a_expl, math.log(p)
            return a, math.log(1.0 - e + e / len(row)) if e > 0.0 else 0.0
        m = max(row)
        exps = [math.exp(z - m) for z in row]
        total = sum(exps)
        u = rng.random() * total
        acc = 0.0
        a = len(exps) - 1
        for i, w in enumerate(exps):
            acc += w
            if u < acc:
                a = i
                break
        return a, math.log(exps[a] / total)
    probs = action_distribution(params, obs, eps=eps)
    a = int(rng.choice(len(probs), p=probs))
    return a, math.log(probs[a])


def value_estimate(params: PolicyParams, obs) -> float:
    """Critic value; only actor-critic parameters carry one."""
    if params.algo != A2C:
        raise NotSupported(f"value_estimate not available for {params.algo!r}")
    if isinstance(params, TableParams):
        _check_obs(params, obs)
        return float(params.vtable[int(obs)])
    x = encode_obs(_mlp_obs_space(params), obs)
    out, _ = _mlp_forward(params.critic, params.critic_layers, x[None, :])
    return float(out[0, 0])


def returns_and_advantages(rewards, dones, values, gamma: float, lam: float):
    """Generalized advantage estimates and returns for one rollout.

    ``values`` must have length len(rewards)+1; the final entry bootstraps
    the cut and is masked away when the last transition is terminal.
    Episode boundaries inside the rollout (done flags) stop both the
    bootstrap and the accumulation.
    """
    t_len = len(rewards)
    if t_len == 0:
        raise LengthMismatch("empty trajectory")
    if len(dones) != t_len or len(values) != t_len + 1:
        raise LengthMismatch(
            f"lengths: rewards={t_len} dones={len(dones)} values={len(values)} (want rewards+1)"
        )
    advantages = np.zeros(t_len)
    running = 0.0
    for t in range(t_len - 1, -1, -1):
        nonterminal = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        advantages[t] = running
    returns = advantages + np.asarray(values[:t_len], dtype=np.float64)
    return returns, advantages


def compute_targets(params: PolicyParams, batch, hp: Hyperparams):
    """Advantage/return targets for a policy-gradient update (held fixed
    while the surrogate objective is differentiated)."""
    rewards = [tr.reward for tr in batch]
    dones = [tr.done for tr in batch]
    if params.algo == REINFORCE:
        # Monte-Carlo returns-to-go: no critic, lambda pinned to 1
        values = np.zeros(len(batch) + 1)
        return returns_and_advantages(rewards, dones, values, hp.gamma, 1.0)
    values = np.empty(len(batch) + 1)
    for i, tr in enumerate(batch):
        values[i] = value_estimate(params, tr.obs)
    values[-1] = value_estimate(params, batch[-1].next_obs)
    return returns_and_advantages(rewards, dones, values, hp.gamma, hp.gae_lambda)


def surrogate_objective(params: PolicyParams, batch, advantages, returns, hp: Hyperparams) -> float:
    """Scalar ascent objective with targets frozen:
    sum(log pi * adv) + entropy_coef * sum(H) - value_coef * sum((V - R)^2)."""
    obj = 0.0
    if isinstance(params, TableParams):
        for tr, adv in zip(batch, advantages):
            p = softmax(params.table[int(tr.obs)])
            logp = np.log(p)
            obj += logp[tr.action] * adv + hp.entropy_coef * -(p * logp).sum()
        if params.algo == A2C:
            for tr, ret in zip(batch, returns):
                diff = params.vtable[int(tr.obs)] - ret
                obj -= hp.value_coef * diff * diff
        return float(obj)
    xs = np.stack([encode_obs(_mlp_obs_space(params), tr.obs) for tr in batch])
    logits, _ = _mlp_forward(params.actor, params.layers, xs)
    zs = logits - logits.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    p = np.exp(logp)
    acts = np.array([tr.action for tr in batch])
    ent = -(p * logp).sum(axis=1)
    obj = (logp[np.arange(len(batch)), acts] * advantages).sum() + hp.entropy_coef * ent.sum()
    if params.algo == A2C:
        vs, _ = _mlp_forward(params.critic, params.critic_layers, xs)
        obj -= hp.value_coef * ((vs[:, 0] - returns) ** 2).sum()
    return float(obj)


def surrogate_gradient(params: PolicyParams, batch, advantages, returns, hp: Hyperparams):
    """Analytic gradient of ``surrogate_objective`` in payload order."""
    if isinstance(params, TableParams):
        g_table = np.zeros_like(params.table)
        for tr, adv in zip(batch, advantages):
            s = int(tr.obs)
            p = softmax(params.table[s])
            logp = np.log(p)
            ent = -(p * logp).sum()
            one = np.zeros_like(p)
            one[tr.action] = 1.0
            g_table[s] += adv * (one - p) + hp.entropy_coef * (-p * (logp + ent))
        grads = [g_table]
        if params.algo == A2C:
            g_v = np.zeros_like(params.vtable)
            for tr, ret in zip(batch, returns):
                s = int(tr.obs)
                g_v[s] += -2.0 * hp.value_coef * (params.vtable[s] - ret)
            grads.append(g_v)
        return grads
    xs = np.stack([encode_obs(_mlp_obs_space(params), tr.obs) for tr in batch])
    logits, hidden = _mlp_forward(params.actor, params.layers, xs)
    zs = logits - logits.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    p = np.exp(logp)
    acts = np.array([tr.action for tr in batch])
    ent = -(p * logp).sum(axis=1)
    one = np.zeros_like(p)
    one[np.arange(len(batch)), acts] = 1.0
    dlogits = np.asarray(advantages)[:, None] * (one - p)
    dlogits += hp.entropy_coef * (-p * (logp + ent[:, None]))
    g_actor = _mlp_backward(params.actor, params.layers, xs, hidden, dlogits)
    grads = [g_actor]
    if params.algo == A2C:
        vs, vhidden = _mlp_forward(params.critic, params.critic_layers, xs)
        dv = -2.0 * hp.value_coef * (vs - np.asarray(returns)[:, None])
        grads.append(_mlp_backward(params.critic, params.critic_layers, xs, vhidden, dv))
    return grads


def update(params: PolicyParams, batch, hp: Hyperparams, update_index: int):
    """One learner update over a full buffer; returns (new params, report)."""
    if not batch:
        raise LengthMismatch("empty buffer")
    if params.algo == Q:
        return _q_update(params, batch, hp, update_index)

    returns, advantages = compute_targets(params, batch, hp)
    grads = surrogate_gradient(params, batch, advantages, returns, hp)
    new = copy_params(params)
    arrays = payload_arrays(new)
    sq = 0.0
    for arr, g in zip(arrays, grads):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("non-finite gradient in learner update")
        sq += float((g * g).sum())
        arr += hp.lr * g
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NonFiniteGradient("non-finite parameters after learner update")

    policy_loss = 0.0
    entropy_total = 0.0
    for tr, adv in zip(batch, advantages):
        p = action_distribution(params, tr.obs)
        logp = np.log(np.maximum(p, 1e-300))
        policy_loss -= float(logp[tr.action]) * float(adv)
        entropy_total += float(-(p * logp).sum())
    value_loss = 0.0
    if params.algo == A2C:
        for tr, ret in zip(batch, returns):
            diff = value_estimate(params, tr.obs) - float(ret)
            value_loss += diff * diff
    report = UpdateReport(
        policy_loss=policy_loss,
        value_loss=value_loss,
        entropy=entropy_total / len(batch),
        grad_norm=math.sqrt(sq),
        update_index=update_index,
    )
    return new, report


def _q_update(params: TableParams, batch, hp: Hyperparams, update_index: int):
    """Per-transition TD(0) rule, applied in buffer order."""
    new = copy_params(params)
    q = new.table
    td_sq = 0.0
    entropy_total = 0.0
    for tr in batch:
        s = int(tr.obs)
        target = tr.reward + (0.0 if tr.done else hp.gamma * q[int(tr.next_obs)].max())
        delta = target - q[s, tr.action]
        if not math.isfinite(delta):
            raise NonFiniteGradient("non-finite TD error in Q update")
        td_sq += delta * delta
        q[s, tr.action] += hp.lr * delta
        p = eps_greedy(q[s], new.eps)
        entropy_total += float(-(p * np.log(p)).sum()) if new.eps > 0.0 else 0.0
    report = UpdateReport(
        policy_loss=0.0,
        value_loss=td_sq,
        entropy=entropy_total / len(batch),
        grad_norm=math.sqrt(td_sq),
        update_index=update_index,
    )
    return new, report
