"""Bit-exact, versioned save/load of policies and trajectories.

Layout for both file kinds:

    line 1:  ``<MAGIC> <crc32>\\n``  (CRC-32 of every byte after this line)
    line 2:  JSON header (version, shapes, metadata), sorted keys
    body:    little-endian float64 payload

The checksum is verified before anything else is parsed, so any byte
corruption surfaces as ChecksumMismatch.  VersionUnsupported and
MalformedFile are only reachable for files whose checksum verifies.
"""

from __future__ import annotations

import json
import os
import tempfile
import zlib

import numpy as np

from .env import JointEnvSpec, JointStep, ProjectedView
from .errors import (
    ChecksumMismatch,
    MalformedFile,
    ShapeMismatch,
    VersionUnsupported,
)
from .learners import (
    MlpParams,
    PolicyParams,
    TableParams,
    params_fit_view,
    payload_arrays,
    vector_length,
)
from .spaces import DISCRETE, SpaceSpec

POLICY_MAGIC = "PNRL-POL"
TRAJECTORY_MAGIC = "PNRL-TRJ"
VERSION = 1
POLICY_EXT = ".pnrlpol"
TRAJECTORY_EXT = ".pnrltrj"


def _atomic_write(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".pnrl-tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pack(magic: str, header: dict, payload: bytes) -> bytes:
    body = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n" + payload
    crc = zlib.crc32(body)
    return f"{magic} {crc}\n".encode() + body


def _unpack(raw: bytes, magic: str):
    """Verify magic + checksum, return (header dict, payload bytes)."""
    nl = raw.find(b"\n")
    if nl < 0:
        raise ChecksumMismatch("missing header line")
    parts = raw[:nl].split(b" ")
    if len(parts) != 2 or parts[0] != magic.encode() or not parts[1].isdigit():
        raise ChecksumMismatch(f"bad magic line (want {magic})")
    body = raw[nl + 1 :]
    if zlib.crc32(body) != int(parts[1]):
        raise ChecksumMismatch("CRC-32 verification failed")
    nl2 = body.find(b"\n")
    if nl2 < 0:
        raise MalformedFile("missing JSON header")
    try:
        header = json.loads(body[:nl2].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedFile(f"unparseable header: {e}") from e
    if not isinstance(header, dict):
        raise MalformedFile("header is not an object")
    version = header.get("version")
    if version != VERSION:
        raise VersionUnsupported(f"file version {version!r}, supported: {VERSION}")
    return header, body[nl2 + 1 :]


def _floats(payload: bytes, count: int, what: str) -> np.ndarray:
    if len(payload) != count * 8:
        raise MalformedFile(f"{what}: payload is {len(payload)} bytes, header declares {count * 8}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64)


def save_policy(params: PolicyParams, metadata: dict | None, path: str) -> None:
    arrays = payload_arrays(params)
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    header = {
        "version": VERSION,
        "kind": params.kind,
        "algo": params.algo,
        "eps": params.eps,
        "has_critic": len(arrays) > 1,
        "count": sum(a.size for a in arrays),
        "metadata": metadata or {},
    }
    if isinstance(params, TableParams):
        header["dims"] = [params.n_states, params.n_actions]
    else:
        header["layers"] = list(params.layers)
    _atomic_write(path, _pack(POLICY_MAGIC, header, payload))


def load_policy(path: str, view: ProjectedView | None = None):
    """Load (params, metadata); with a view given, enforce seat fit."""
    with open(path, "rb") as f:
        raw = f.read()
    header, payload = _unpack(raw, POLICY_MAGIC)
    try:
        kind = header["kind"]
        algo = header["algo"]
        eps = float(header["eps"])
        has_critic = bool(header["has_critic"])
        count = int(header["count"])
        metadata = header["metadata"]
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedFile(f"incomplete policy header: {e}") from e
    flat = _floats(payload, count, "policy")
    if kind == "table":
        try:
            s, a = (int(x) for x in header["dims"])
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedFile(f"bad table dims: {e}") from e
        want = s * a + (s if has_critic else 0)
        if want != count or s < 1 or a < 1:
            raise MalformedFile(f"table dims {s}x{a} inconsistent with count {count}")
        table = flat[: s * a].reshape(s, a).copy()
        vtable = flat[s * a :].copy() if has_critic else None
        params: PolicyParams = TableParams(algo=algo, table=table, vtable=vtable, eps=eps)
    elif kind == "mlp":
        try:
            layers = tuple(int(x) for x in header["layers"])
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedFile(f"bad layer sizes: {e}") from e
        if len(layers) < 2 or any(x < 1 for x in layers):
            raise MalformedFile(f"bad layer sizes {layers}")
        n_actor = vector_length(layers)
        n_critic = vector_length(layers[:-1] + (1,)) if has_critic else 0
        if n_actor + n_critic != count:
            raise MalformedFile(f"layer sizes {layers} inconsistent with count {count}")
        actor = flat[:n_actor].copy()
        critic = flat[n_actor:].copy() if has_critic else None
        params = MlpParams(algo=algo, layers=layers, actor=actor, critic=critic, eps=eps)
    else:
        raise MalformedFile(f"unknown policy kind {kind!r}")
    if algo not in ("q", "reinforce", "a2c"):
        raise MalformedFile(f"unknown algo {algo!r}")
    if not np.all(np.isfinite(flat)):
        raise MalformedFile("non-finite parameter entries")
    if view is not None and not params_fit_view(params, view):
        raise ShapeMismatch(f"policy shapes do not fit obs {view.obs_space}, act {view.act_space}")
    return params, metadata


def _obs_width(space: SpaceSpec) -> int:
    return 1 if space.kind == DISCRETE else space.dim


def save_trajectory(steps: list, spec: JointEnvSpec, path: str, metadata: dict | None = None) -> None:
    """Step-major, agent-minor record stream: t, done, obs*, actions*, rewards*."""
    n = spec.n_agents
    widths = [_obs_width(s) for s in spec.obs_spaces]
    rec = 2 + sum(widths) + n + n
    buf = np.empty((len(steps), rec))
    for k, js in enumerate(steps):
        row = [float(js.t), 1.0 if js.done else 0.0]
        for i in range(n):
            if spec.obs_spaces[i].kind == DISCRETE:
                row.append(float(js.obs[i]))
            else:
                row.extend(float(x) for x in js.obs[i])
        row.extend(float(a) for a in js.actions)
        row.extend(float(r) for r in js.rewards)
        buf[k] = row
    header = {
        "version": VERSION,
        "env_spec": spec.as_dict(),
        "n_agents": n,
        "horizon": spec.horizon,
        "n_steps": len(steps),
        "metadata": metadata or {},
    }
    _atomic_write(path, _pack(TRAJECTORY_MAGIC, header, buf.astype("<f8").tobytes()))


def load_trajectory(path: str):
    """Load (steps, spec, metadata) with structural validation."""
    with open(path, "rb") as f:
        raw = f.read()
    header, payload = _unpack(raw, TRAJECTORY_MAGIC)
    try:
        spec = JointEnvSpec.from_dict(header["env_spec"])
        n = int(header["n_agents"])
        n_steps = int(header["n_steps"])
        metadata = header["metadata"]
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedFile(f"incomplete trajectory header: {e}") from e
    if n != spec.n_agents:
        raise MalformedFile(f"header n_agents {n} != env spec n_agents {spec.n_agents}")
    if int(header["horizon"]) != spec.horizon:
        raise MalformedFile("header horizon disagrees with env spec")
    widths = [_obs_width(s) for s in spec.obs_spaces]
    rec = 2 + sum(widths) + n + n
    flat = _floats(payload, n_steps * rec, "trajectory")
    rows = flat.reshape(n_steps, rec) if n_steps else flat.reshape(0, rec)
    steps = []
    prev_t = 0
    for k in range(n_steps):
        row = rows[k]
        t = int(row[0])
        done_val = row[1]
        if done_val not in (0.0, 1.0):
            raise MalformedFile(f"step {k}: done flag {done_val} not boolean")
        done = bool(done_val)
        if t != prev_t + 1:
            raise MalformedFile(f"step {k}: t={t} does not follow t={prev_t}")
        if t > spec.horizon:
            raise MalformedFile(f"step {k}: t={t} exceeds horizon {spec.horizon}")
        prev_t = 0 if done else t
        off = 2
        obs = []
        for i in range(n):
            if spec.obs_spaces[i].kind == DISCRETE:
                obs.append(int(row[off]))
                off += 1
            else:
                obs.append(row[off : off + widths[i]].copy())
                off += widths[i]
        actions = [int(x) for x in row[off : off + n]]
        off += n
        rewards = [float(x) for x in row[off : off + n]]
        steps.append(JointStep(t=t, obs=obs, actions=actions, rewards=rewards, done=done))
    if steps and not steps[-1].done:
        raise MalformedFile("trajectory does not end on a done step")
    return steps, spec, metadata
