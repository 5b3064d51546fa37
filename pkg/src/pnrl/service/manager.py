"""Job lifecycle: queueing, bounded-parallel workers, cancellation, recovery.

State machine: pending -> running -> {succeeded, failed, cancelled},
plus pending -> cancelled.  Every transition is persisted before it is
observable through the API.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field

from ..config import validate_config
from ..errors import AlreadyTerminal, PnrlError, UnknownJob
from ..runner import run_config
from .store import Store

PENDING = "pending"
RUNNING = "running"
SUCCEEDED = "succeeded"
FAILED = "failed"
CANCELLED = "cancelled"
TERMINAL = (SUCCEEDED, FAILED, CANCELLED)

LEGAL_TRANSITIONS = {
    PENDING: {RUNNING, CANCELLED},
    RUNNING: {SUCCEEDED, FAILED, CANCELLED},
    SUCCEEDED: set(),
    FAILED: set(),
    CANCELLED: set(),
}

DEFAULT_SESSION = "default"
_FLUSH_EVERY = 50


@dataclass
class JobRecord:
    job_id: str
    config: dict
    state: str = PENDING
    created: float = 0.0
    started: float | None = None
    ended: float | None = None
    error: str | None = None
    artifacts: list = field(default_factory=list)
    session: str = DEFAULT_SESSION
    result: dict | None = None

    def as_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "config": self.config,
            "state": self.state,
            "created": self.created,
            "started": self.started,
            "ended": self.ended,
            "error": self.error,
            "artifacts": self.artifacts,
            "session": self.session,
            "result": self.result,
        }

    @staticmethod
    def from_dict(d: dict) -> "JobRecord":
        return JobRecord(
            job_id=d["job_id"],
            config=d["config"],
            state=d["state"],
            created=d["created"],
            started=d.get("started"),
            ended=d.get("ended"),
            error=d.get("error"),
            artifacts=d.get("artifacts", []),
            session=d.get("session", DEFAULT_SESSION),
            result=d.get("result"),
        )


class JobManager:
    """Owns the job registry; all mutation happens under one lock."""

    def __init__(self, store: Store, jobs_root: str, max_parallel: int = 4):
        if max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        self.store = store
        self.jobs_root = jobs_root
        self.max_parallel = max_parallel
        self._lock = threading.Lock()
        self._jobs: dict[str, JobRecord] = {}
        self._queue: deque[str] = deque()
        self._running: set[str] = set()
        self._cancel_events: dict[str, threading.Event] = {}
        os.makedirs(jobs_root, exist_ok=True)
        self._ensure_session(DEFAULT_SESSION)

    # -- persistence helpers ------------------------------------------------

    def _save(self, job: JobRecord) -> None:
        self.store.put(f"job:{job.job_id}", job.as_dict())

    def _ensure_session(self, token: str) -> dict:
        rec = self.store.get(f"session:{token}")
        if rec is None:
            rec = {
                "token": token,
                "created": time.time(),
                "last_access": time.time(),
                "saved_configs": [],
                "job_ids": [],
            }
            self.store.put(f"session:{token}", rec)
        return rec

    # -- startup ------------------------------------------------------------

    def recover(self) -> None:
        """Reload the registry; interrupted running jobs fail, pending requeue."""
        with self._lock:
            for d in self.store.list_prefix("job:"):
                job = JobRecord.from_dict(d)
                if job.state == RUNNING:
                    job.state = FAILED
                    job.error = "interrupted"
                    job.ended = time.time()
                    self._save(job)
                self._jobs[job.job_id] = job
            for job in sorted(self._jobs.values(), key=lambda j: j.created):
                if job.state == PENDING:
                    self._queue.append(job.job_id)
            self._schedule_locked()

    # -- state machine ------------------------------------------------------

    def _set_state_locked(self, job: JobRecord, new_state: str) -> None:
        if new_state not in LEGAL_TRANSITIONS[job.state]:
            raise AlreadyTerminal(f"job {job.job_id}: cannot go {job.state} -> {new_state}")
        # timestamps land before the state flips so no reader ever sees a
        # terminal state without its end time
        now = time.time()
        if new_state == RUNNING:
            job.started = now
        if new_state in TERMINAL:
            job.ended = now
        job.state = new_state
        self._save(job)

    def _schedule_locked(self) -> None:
        while self._queue and len(self._running) < self.max_parallel:
            jid = self._queue.popleft()
            job = self._jobs[jid]
            if job.state != PENDING:
                continue
            self._set_state_locked(job, RUNNING)
            ev = threading.Event()
            self._cancel_events[jid] = ev
            self._running.add(jid)
            t = threading.Thread(target=self._work, args=(jid, ev), daemon=True, name=f"pnrl-job-{jid}")
            t.start()

    # -- worker -------------------------------------------------------------

    def _work(self, jid: str, cancel_event: threading.Event) -> None:
        job = self._jobs[jid]
        buffer: list = []

        def sink(row) -> None:
            buffer.append(row)
            if len(buffer) >= _FLUSH_EVERY:
                self.store.append_metrics(buffer)
                buffer.clear()

        out_dir = os.path.join(self.jobs_root, jid)
        final_state = FAILED
        error = None
        result = None
        try:
            cfg = validate_config(job.config)
            result = run_config(
                cfg,
                out_dir,
                cancel_check=cancel_event.is_set,
                metrics_sink=sink,
                job_id=jid,
            )
            final_state = CANCELLED if result.get("cancelled") else SUCCEEDED
        except PnrlError as e:
            error = str(e)
        except Exception as e:  # a worker must never take the service down
            error = f"{type(e).__name__}: {e}"
        if buffer:
            self.store.append_metrics(buffer)
            buffer.clear()
        with self._lock:
            job.error = error
            if result is not None:
                job.artifacts = result.pop("artifacts", [])
                job.result = result
            self._set_state_locked(job, final_state)
            self._running.discard(jid)
            self._cancel_events.pop(jid, None)
            self._schedule_locked()

    # -- API surface ----------------------------------------------------------

    def create_job(self, config: dict, session: str = DEFAULT_SESSION) -> JobRecord:
        validate_config(config)  # raises InvalidConfig with field diagnostics
        jid = uuid.uuid4().hex[:12]
        job = JobRecord(job_id=jid, config=config, created=time.time(), session=session)
        with self._lock:
            self._jobs[jid] = job
            self._save(job)
            rec = self._ensure_session(session)
            rec["job_ids"].append(jid)
            rec["last_access"] = time.time()
            self.store.put(f"session:{session}", rec)
            self._queue.append(jid)
            self._schedule_locked()
        return job

    def get_job(self, jid: str, session: str | None = None) -> JobRecord:
        with self._lock:
            job = self._jobs.get(jid)
            if job is None or (session is not None and job.session != session):
                raise UnknownJob(jid)
            return job

    def list_jobs(self, session: str = DEFAULT_SESSION) -> list[JobRecord]:
        with self._lock:
            jobs = [j for j in self._jobs.values() if j.session == session]
        return sorted(jobs, key=lambda j: j.created, reverse=True)

    def cancel_job(self, jid: str, session: str | None = None) -> JobRecord:
        with self._lock:
            job = self._jobs.get(jid)
            if job is None or (session is not None and job.session != session):
                raise UnknownJob(jid)
            if job.state in TERMINAL:
                raise AlreadyTerminal(f"job {jid} already {job.state}")
            if job.state == PENDING:
                self._set_state_locked(job, CANCELLED)
            else:
                self._cancel_events[jid].set()
            return job

    def job_dict(self, jid: str, session: str | None = None) -> dict:
        with self._lock:
            job = self._jobs.get(jid)
            if job is None or (session is not None and job.session != session):
                raise UnknownJob(jid)
            return job.as_dict()

    def list_job_dicts(self, session: str = DEFAULT_SESSION) -> list[dict]:
        with self._lock:
            jobs = [j.as_dict() for j in self._jobs.values() if j.session == session]
        return sorted(jobs, key=lambda j: j["created"], reverse=True)

    def get_metrics(self, jid: str, after_seq: int, session: str | None = None):
        self.get_job(jid, session)
        return self.store.metrics_after(jid, after_seq)

    def running_count(self) -> int:
        with self._lock:
            return len(self._running)

    # -- sessions -------------------------------------------------------------

    def login(self) -> str:
        token = uuid.uuid4().hex
        self._ensure_session(token)
        return token

    def logout(self, token: str) -> None:
        if token != DEFAULT_SESSION:
            self.store.delete(f"session:{token}")

    def session_exists(self, token: str) -> bool:
        return self.store.get(f"session:{token}") is not None
