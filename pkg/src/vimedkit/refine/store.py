"""Persistent task queue for human refinement of machine translations.

Backed by a single sqlite file in WAL journal mode. Every task transition
runs inside an IMMEDIATE transaction, so claims and submissions are atomic
and linearizable per task even under concurrent clients; reads may observe
stale snapshots. Expired claims are reclaimable, which lets the queue
survive abandoned sessions without an explicit release call.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

from ..mednli import AbbrevRule, NliExample, apply_abbrev_rules

DEFAULT_LEASE_SECONDS = 15 * 60

TASK_FIELDS = ("premise", "hypothesis")

_SCHEMA = """
CREATE TABLE IF NOT EXISTS examples (
    uid TEXT PRIMARY KEY,
    premise TEXT NOT NULL,
    hypothesis TEXT NOT NULL,
    label TEXT NOT NULL,
    split TEXT NOT NULL,
    state TEXT NOT NULL DEFAULT 'machine',
    applied_rules TEXT NOT NULL DEFAULT '[]',
    source_premise TEXT NOT NULL DEFAULT '',
    source_hypothesis TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS tasks (
    task_id INTEGER PRIMARY KEY AUTOINCREMENT,
    uid TEXT NOT NULL,
    field TEXT NOT NULL,
    source_text TEXT NOT NULL DEFAULT '',
    machine_text TEXT NOT NULL,
    suggested_text TEXT NOT NULL,
    suggested_rule_ids TEXT NOT NULL DEFAULT '[]',
    status TEXT NOT NULL DEFAULT 'open',
    claimant TEXT,
    claim_expiry REAL,
    final_text TEXT,
    UNIQUE (uid, field)
);
CREATE INDEX IF NOT EXISTS tasks_status ON tasks (status, claim_expiry);
"""


class TaskStoreError(RuntimeError):
    pass


class UnknownTaskError(TaskStoreError):
    pass


class WrongClaimantError(TaskStoreError):
    pass


class LeaseExpiredError(TaskStoreError):
    pass


class TaskStateError(TaskStoreError):
    pass


@dataclass(frozen=True)
class RefinementTask:
    task_id: int
    uid: str
    field: str
    source_text: str
    machine_text: str
    suggested_text: str
    suggested_rule_ids: tuple[str, ...]
    status: str
    claimant: str | None = None
    claim_expiry: float | None = None
    final_text: str | None = None


@dataclass
class ProgressSnapshot:
    open: int = 0
    claimed: int = 0
    submitted: int = 0
    by_annotator: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.open + self.claimed + self.submitted

    @property
    def all_submitted(self) -> bool:
        return self.total > 0 and self.submitted == self.total

    def as_dict(self) -> dict:
        return {
            "open": self.open,
            "claimed": self.claimed,
            "submitted": self.submitted,
            "total": self.total,
            "all_submitted": self.all_submitted,
            "by_annotator": dict(sorted(self.by_annotator.items())),
        }


def _row_to_task(row: sqlite3.Row) -> RefinementTask:
    return RefinementTask(
        task_id=row["task_id"],
        uid=row["uid"],
        field=row["field"],
        source_text=row["source_text"],
        machine_text=row["machine_text"],
        suggested_text=row["suggested_text"],
        suggested_rule_ids=tuple(json.loads(row["suggested_rule_ids"])),
        status=row["status"],
        claimant=row["claimant"],
        claim_expiry=row["claim_expiry"],
        final_text=row["final_text"],
    )


class TaskStore:
    """sqlite-backed refinement queue; one connection per thread."""

    def __init__(
        self,
        path: str | Path,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        now_fn: Callable[[], float] = time.time,
    ):
        self.path = Path(path)
        self.lease_seconds = lease_seconds
        self.now_fn = now_fn
        self._local = threading.local()
        with self._connect() as conn:
            conn.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            # isolation_level=None: transactions are managed explicitly so
            # BEGIN IMMEDIATE takes the write lock up front.
            conn = sqlite3.connect(self.path, timeout=30.0, isolation_level=None)
            conn.row_factory = sqlite3.Row
            conn.execute("PRAGMA journal_mode=WAL")
            conn.execute("PRAGMA busy_timeout=30000")
            self._local.conn = conn
        return conn

    @contextmanager
    def _immediate(self) -> Iterator[sqlite3.Connection]:
        conn = self._connect()
        conn.execute("BEGIN IMMEDIATE")
        try:
            yield conn
            if conn.in_transaction:
                conn.execute("COMMIT")
        except BaseException:
            if conn.in_transaction:
                conn.execute("ROLLBACK")
            raise

    def close(self):
        conn = getattr(self._local, "conn", None)
        if conn is not None:
            conn.close()
            self._local.conn = None

    def enqueue(
        self, examples: Sequence[NliExample], lexicon: Sequence[AbbrevRule]
    ) -> int:
        """Create premise and hypothesis tasks for machine-state examples.

        Re-enqueueing is idempotent: existing (uid, field) tasks and their
        progress are untouched. Returns the number of newly created tasks.
        """
        for example in examples:
            if example.state != "machine":
                raise ValueError(
                    f"record {example.uid}: enqueue requires state=machine"
                )
        created = 0
        with self._immediate() as conn:
            for example in examples:
                conn.execute(
                    "INSERT OR IGNORE INTO examples "
                    "(uid, premise, hypothesis, label, split, state, "
                    " applied_rules, source_premise, source_hypothesis) "
                    "VALUES (?, ?, ?, ?, ?, 'machine', '[]', ?, ?)",
                    (
                        example.uid,
                        example.premise,
                        example.hypothesis,
                        example.label,
                        example.split,
                        example.source_premise or "",
                        example.source_hypothesis or "",
                    ),
                )
                for task_field in TASK_FIELDS:
                    machine_text = getattr(example, task_field)
                    suggested, rule_ids = apply_abbrev_rules(machine_text, lexicon)
                    source_text = (
                        example.source_premise
                        if task_field == "premise"
                        else example.source_hypothesis
                    ) or ""
                    cursor = conn.execute(
                        "INSERT OR IGNORE INTO tasks "
                        "(uid, field, source_text, machine_text, "
                        " suggested_text, suggested_rule_ids) "
                        "VALUES (?, ?, ?, ?, ?, ?)",
                        (
                            example.uid,
                            task_field,
                            source_text,
                            machine_text,
                            suggested,
                            json.dumps(rule_ids),
                        ),
                    )
                    created += cursor.rowcount
        return created

    def claim_next(
        self, annotator_id: str, lease_seconds: float | None = None
    ) -> RefinementTask | None:
        """Atomically claim one open (or expired-claim) task.

        No two annotators ever hold the same task concurrently. Returns None
        when the queue is drained.
        """
        if not annotator_id:
            raise ValueError("annotator_id must be non-empty")
        lease = self.lease_seconds if lease_seconds is None else lease_seconds
        now = self.now_fn()
        with self._immediate() as conn:
            row = conn.execute(
                "SELECT * FROM tasks WHERE status = 'open' "
                "OR (status = 'claimed' AND claim_expiry <= ?) "
                "ORDER BY task_id LIMIT 1",
                (now,),
            ).fetchone()
            if row is None:
                return None
            expiry = now + lease
            conn.execute(
                "UPDATE tasks SET status = 'claimed', claimant = ?, "
                "claim_expiry = ? WHERE task_id = ?",
                (annotator_id, expiry, row["task_id"]),
            )
            row = conn.execute(
                "SELECT * FROM tasks WHERE task_id = ?", (row["task_id"],)
            ).fetchone()
        return _row_to_task(row)

    def submit(
        self, task_id: int, annotator_id: str, final_text: str
    ) -> RefinementTask:
        """Record the final text for a claimed task.

        The claiming annotator must still hold a valid lease; an expired
        lease reverts the task to open and raises. Once both tasks of an
        example are submitted, the example becomes refined.
        """
        if not final_text:
            raise ValueError("final_text must be non-empty")
        now = self.now_fn()
        with self._immediate() as conn:
            row = conn.execute(
                "SELECT * FROM tasks WHERE task_id = ?", (task_id,)
            ).fetchone()
            if row is None:
                raise UnknownTaskError(f"no task {task_id}")
            if row["status"] == "submitted":
                raise TaskStateError(f"task {task_id} already submitted")
            if row["status"] != "claimed" or row["claimant"] != annotator_id:
                raise WrongClaimantError(
                    f"task {task_id} is not claimed by {annotator_id!r}"
                )
            if row["claim_expiry"] is not None and row["claim_expiry"] <= now:
                conn.execute(
                    "UPDATE tasks SET status = 'open', claimant = NULL, "
                    "claim_expiry = NULL WHERE task_id = ?",
                    (task_id,),
                )
                conn.execute("COMMIT")  # the revert must land before raising
                raise LeaseExpiredError(
                    f"lease on task {task_id} expired; task reopened"
                )
            conn.execute(
                "UPDATE tasks SET status = 'submitted', final_text = ? "
                "WHERE task_id = ?",
                (final_text, task_id),
            )
            column = "premise" if row["field"] == "premise" else "hypothesis"
            conn.execute(
                f"UPDATE examples SET {column} = ? WHERE uid = ?",
                (final_text, row["uid"]),
            )
            sibling_rows = conn.execute(
                "SELECT status, suggested_rule_ids FROM tasks WHERE uid = ?",
                (row["uid"],),
            ).fetchall()
            if all(s["status"] == "submitted" for s in sibling_rows):
                rule_ids: list[str] = []
                for sibling in sibling_rows:
                    for rule_id in json.loads(sibling["suggested_rule_ids"]):
                        if rule_id not in rule_ids:
                            rule_ids.append(rule_id)
                conn.execute(
                    "UPDATE examples SET state = 'refined', applied_rules = ? "
                    "WHERE uid = ?",
                    (json.dumps(rule_ids), row["uid"]),
                )
            row = conn.execute(
                "SELECT * FROM tasks WHERE task_id = ?", (task_id,)
            ).fetchone()
        return _row_to_task(row)

    def get_task(self, task_id: int) -> RefinementTask:
        row = self._connect().execute(
            "SELECT * FROM tasks WHERE task_id = ?", (task_id,)
        ).fetchone()
        if row is None:
            raise UnknownTaskError(f"no task {task_id}")
        return _row_to_task(row)

    def progress(self) -> ProgressSnapshot:
        """Read-only snapshot: counts by status plus per-annotator submissions."""
        conn = self._connect()
        snapshot = ProgressSnapshot()
        for row in conn.execute(
            "SELECT status, COUNT(*) AS n FROM tasks GROUP BY status"
        ):
            setattr(snapshot, row["status"], row["n"])
        for row in conn.execute(
            "SELECT claimant, COUNT(*) AS n FROM tasks "
            "WHERE status = 'submitted' GROUP BY claimant"
        ):
            if row["claimant"]:
                snapshot.by_annotator[row["claimant"]] = row["n"]
        return snapshot

    def examples(self) -> list[NliExample]:
        """Materialize current example rows (for export)."""
        rows = self._connect().execute(
            "SELECT * FROM examples ORDER BY uid"
        ).fetchall()
        return [
            NliExample(
                uid=row["uid"],
                premise=row["premise"],
                hypothesis=row["hypothesis"],
                label=row["label"],
                split=row["split"],
                state=row["state"],
                applied_rules=list(json.loads(row["applied_rules"])),
                source_premise=row["source_premise"] or None,
                source_hypothesis=row["source_hypothesis"] or None,
            )
            for row in rows
        ]
