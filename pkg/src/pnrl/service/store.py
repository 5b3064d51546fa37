"""Embedded on-disk store: one sqlite file holding job/session records (as
JSON in a kv table) plus the append-only metric rows."""

from __future__ import annotations

import json
import os
import sqlite3
import threading

from ..metrics import MetricRow, row_from_dict


class Store:
    """Thread-safe wrapper around a single sqlite database file."""

    def __init__(self, path: str):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self._lock = threading.Lock()
        self._db = sqlite3.connect(path, check_same_thread=False)
        with self._lock:
            self._db.execute("PRAGMA journal_mode=WAL")
            self._db.execute("PRAGMA synchronous=NORMAL")
            self._db.execute(
                "CREATE TABLE IF NOT EXISTS kv (k TEXT PRIMARY KEY, v TEXT NOT NULL)"
            )
            self._db.execute(
                "CREATE TABLE IF NOT EXISTS metrics ("
                " job_id TEXT NOT NULL, seq INTEGER NOT NULL,"
                " env_step INTEGER NOT NULL, episode INTEGER NOT NULL,"
                " kind TEXT NOT NULL, returns TEXT NOT NULL, losses TEXT NOT NULL,"
                " wall_clock REAL NOT NULL,"
                " PRIMARY KEY (job_id, seq))"
            )
            self._db.commit()

    def close(self) -> None:
        with self._lock:
            self._db.close()

    def put(self, key: str, value: dict) -> None:
        data = json.dumps(value, sort_keys=True)
        with self._lock:
            self._db.execute(
                "INSERT INTO kv (k, v) VALUES (?, ?) ON CONFLICT(k) DO UPDATE SET v = excluded.v",
                (key, data),
            )
            self._db.commit()

    def get(self, key: str) -> dict | None:
        with self._lock:
            row = self._db.execute("SELECT v FROM kv WHERE k = ?", (key,)).fetchone()
        return json.loads(row[0]) if row else None

    def delete(self, key: str) -> None:
        with self._lock:
            self._db.execute("DELETE FROM kv WHERE k = ?", (key,))
            self._db.commit()

    def list_prefix(self, prefix: str) -> list[dict]:
        with self._lock:
            rows = self._db.execute(
                "SELECT v FROM kv WHERE k >= ? AND k < ? ORDER BY k",
                (prefix, prefix + "\x7f"),
            ).fetchall()
        return [json.loads(r[0]) for r in rows]

    def append_metrics(self, rows: list[MetricRow]) -> None:
        if not rows:
            return
        data = [
            (
                r.job_id,
                r.seq,
                r.env_step,
                r.episode,
                r.kind,
                json.dumps(r.returns),
                json.dumps(r.losses),
                r.wall_clock,
            )
            for r in rows
        ]
        with self._lock:
            self._db.executemany(
                "INSERT INTO metrics (job_id, seq, env_step, episode, kind, returns, losses, wall_clock)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                data,
            )
            self._db.commit()

    def metrics_after(self, job_id: str, after_seq: int) -> list[MetricRow]:
        with self._lock:
            rows = self._db.execute(
                "SELECT seq, env_step, episode, kind, returns, losses, wall_clock"
                " FROM metrics WHERE job_id = ? AND seq > ? ORDER BY seq",
                (job_id, after_seq),
            ).fetchall()
        return [
            row_from_dict(
                {
                    "seq": r[0],
                    "env_step": r[1],
                    "episode": r[2],
                    "kind": r[3],
                    "returns": json.loads(r[4]),
                    "losses": json.loads(r[5]),
                    "wall_clock": r[6],
                    "job_id": job_id,
                }
            )
            for r in rows
        ]

    def metric_count(self, job_id: str) -> int:
        with self._lock:
            row = self._db.execute(
                "SELECT COUNT(*) FROM metrics WHERE job_id = ?", (job_id,)
            ).fetchone()
        return int(row[0])
