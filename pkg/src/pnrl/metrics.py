"""Metric rows emitted by training sessions and stored by the job service.

Rows serialize two ways: the full form (API responses) includes job id and
wall-clock; the canonical form drops both so that equal-seeded runs produce
byte-identical streams.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field

EPISODE = "episode"
UPDATE = "update"


@dataclass(slots=True)
class MetricRow:
    seq: int
    env_step: int
    episode: int
    kind: str
    returns: list
    losses: list
    job_id: str | None = None
    wall_clock: float = 0.0

    def as_dict(self) -> dict:
        d = self.canonical_dict()
        d["job_id"] = self.job_id
        d["wall_clock"] = self.wall_clock
        return d

    def canonical_dict(self) -> dict:
        return {
            "seq": self.seq,
            "env_step": self.env_step,
            "episode": self.episode,
            "kind": self.kind,
            "returns": self.returns,
            "losses": self.losses,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))


def row_from_dict(d: dict) -> MetricRow:
    return MetricRow(
        seq=d["seq"],
        env_step=d["env_step"],
        episode=d["episode"],
        kind=d["kind"],
        returns=d["returns"],
        losses=d["losses"],
        job_id=d.get("job_id"),
        wall_clock=d.get("wall_clock", 0.0),
    )


class MetricLog:
    """Per-session metric stream: windowed per-seat returns, monotone seq."""

    WINDOW = 20

    def __init__(self, n_seats: int, sink=None, job_id: str | None = None):
        self.n_seats = n_seats
        self.sink = sink
        self.job_id = job_id
        self.rows: list[MetricRow] = []
        self._windows = [deque(maxlen=self.WINDOW) for _ in range(n_seats)]
        self._last_losses: list = [None] * n_seats
        self._seq = 0

    def _emit(self, env_step: int, episode: int, kind: str) -> MetricRow:
        self._seq += 1
        returns = [
            (sum(w) / len(w)) if w else None for w in self._windows
        ]
        row = MetricRow(
            seq=self._seq,
            env_step=env_step,
            episode=episode,
            kind=kind,
            returns=returns,
            losses=list(self._last_losses),
            job_id=self.job_id,
            wall_clock=time.time(),
        )
        self.rows.append(row)
        if self.sink is not None:
            self.sink(row)
        return row

    def episode_end(self, env_step: int, episode: int, seat_returns: list) -> MetricRow:
        for seat, ret in enumerate(seat_returns):
            self._windows[seat].append(ret)
        return self._emit(env_step, episode, EPISODE)

    def update_event(self, env_step: int, episode: int, seat: int, report) -> None:
        self._last_losses[seat] = report.as_dict()

    def update_row(self, env_step: int, episode: int) -> MetricRow:
        return self._emit(env_step, episode, UPDATE)

    def canonical_lines(self) -> list[str]:
        return [r.canonical_json() for r in self.rows]
