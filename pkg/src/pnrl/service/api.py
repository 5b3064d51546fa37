"""HTTP API over the job manager, plus static hosting of the built web UI."""

from __future__ import annotations

import dataclasses
import os

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..envs_builtin import REGISTRY, optimal_return
from ..errors import AlreadyTerminal, ConfigFieldError, InvalidConfig, UnknownEnv, UnknownJob
from ..learners import ALGO_IDS, Hyperparams
from ..agents import SAMPLING_MODES
from .manager import DEFAULT_SESSION, JobManager
from .store import Store

CONFIG_SCHEMA = {
    "mode": "train | adapt | eval | crossplay",
    "env_id": "environment id from /api/catalog",
    "master_seed": "non-negative integer, drives all randomness",
    "total_timesteps": "joint env steps budget (train/adapt)",
    "eval_episodes": "episode count (eval/crossplay)",
    "ego": {"agent": "agent spec string for seat 0"},
    "seats": [
        {
            "seat": "partner seat index, 1..n_agents-1",
            "sampling": "round_robin | uniform_random",
            "agents": ["agent spec strings forming the seat's pool"],
        }
    ],
    "crossplay": {"policies": ["policy file paths (crossplay mode)"]},
    "agent_spec": "static:<policy-file> | learn:<algo>[:<k=v,...>] "
    "(keys: lr, gamma, gae_lambda, entropy_coef, value_coef, eps, batch, policy, init)",
}


def _catalog() -> dict:
    envs = []
    for env_id in REGISTRY.ids():
        spec = REGISTRY.make(env_id).spec
        try:
            best = list(optimal_return(env_id))
        except UnknownEnv:
            # externally registered environments have no known optimum
            best = None
        envs.append({**spec.as_dict(), "optimal_return": best})
    defaults = dataclasses.asdict(Hyperparams())
    algorithms = [
        {
            "id": algo,
            "hyperparams": [{"name": k, "default": v} for k, v in defaults.items()],
            "uses_critic": algo == "a2c",
        }
        for algo in ALGO_IDS
    ]
    return {"envs": envs, "algorithms": algorithms, "sampling_modes": list(SAMPLING_MODES)}


def create_app(data_dir: str = "pnrl_data", max_parallel: int = 4, frontend_dir: str | None = None) -> FastAPI:
    store = Store(os.path.join(data_dir, "store.sqlite3"))
    manager = JobManager(store, os.path.join(data_dir, "jobs"), max_parallel=max_parallel)
    manager.recover()

    app = FastAPI(title="pnrl experiment service", version="0.1.0")
    app.state.manager = manager
    app.state.store = store

    def session_of(token: str | None) -> str:
        if token is None or token == DEFAULT_SESSION:
            return DEFAULT_SESSION
        if not manager.session_exists(token):
            raise HTTPException(status_code=401, detail="unknown session token")
        return token

    @app.exception_handler(InvalidConfig)
    async def invalid_config_handler(request: Request, exc: InvalidConfig):
        return JSONResponse(
            status_code=422,
            content={"detail": {"errors": [e.as_dict() for e in exc.errors]}},
        )

    @app.exception_handler(UnknownJob)
    async def unknown_job_handler(request: Request, exc: UnknownJob):
        return JSONResponse(status_code=404, content={"detail": "unknown job"})

    @app.exception_handler(AlreadyTerminal)
    async def terminal_handler(request: Request, exc: AlreadyTerminal):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.post("/api/jobs", status_code=201)
    async def create_job(request: Request, x_session_token: str | None = Header(default=None)):
        session = session_of(x_session_token)
        body = await request.json()
        if not isinstance(body, dict):
            raise InvalidConfig([ConfigFieldError("", "request body must be a JSON object")])
        job = manager.create_job(body, session=session)
        return job.as_dict()

    @app.get("/api/jobs")
    async def list_jobs(x_session_token: str | None = Header(default=None)):
        session = session_of(x_session_token)
        return {"jobs": manager.list_job_dicts(session)}

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str, x_session_token: str | None = Header(default=None)):
        session = session_of(x_session_token)
        return manager.job_dict(job_id, session=session)

    @app.get("/api/jobs/{job_id}/metrics")
    async def get_metrics(job_id: str, after: int = 0, x_session_token: str | None = Header(default=None)):
        session = session_of(x_session_token)
        rows = manager.get_metrics(job_id, after, session=session)
        return {"rows": [r.as_dict() for r in rows]}

    @app.post("/api/jobs/{job_id}/cancel")
    async def cancel_job(job_id: str, x_session_token: str | None = Header(default=None)):
        session = session_of(x_session_token)
        manager.cancel_job(job_id, session=session)
        return manager.job_dict(job_id, session=session)

    @app.get("/api/catalog")
    async def catalog():
        return _catalog()

    @app.get("/api/schema")
    async def schema():
        return {"config": CONFIG_SCHEMA}

    @app.post("/api/session/login")
    async def login():
        return {"token": manager.login()}

    @app.post("/api/session/logout")
    async def logout(x_session_token: str | None = Header(default=None)):
        if x_session_token:
            manager.logout(x_session_token)
        return {"ok": True}

    if frontend_dir is None:
        here = os.path.dirname(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))
        frontend_dir = os.path.join(here, "frontend", "dist")
    if os.path.isdir(frontend_dir):
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
