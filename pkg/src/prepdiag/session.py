"""Per-learner session state: entity counter, diagnosis cache, history.

History is append-only; when a directory is configured each session gets
one line-delimited record file there, which is enough to replay a
session and reproduce its diagnosis trees up to entity renaming.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from .terms import EntityAllocator


class Session:
    def __init__(self, session_id: str, persist_dir: str | Path | None = None):
        self.id = session_id
        self.allocator = EntityAllocator()
        self.diagnoses: dict[str, object] = {}
        self.history: list[dict] = []
        self.lock = threading.RLock()  # service holds it across diagnose/why
        self._diag_n = 0
        self._path = Path(persist_dir) / f"{session_id}.jsonl" if persist_dir else None
        if self._path:
            self._path.parent.mkdir(parents=True, exist_ok=True)

    def next_diagnosis_id(self) -> str:
        with self.lock:
            self._diag_n += 1
            return f"{self.id}-d{self._diag_n}"

    def adopt(self, diagnosis) -> None:
        self.diagnoses[diagnosis.id] = diagnosis

    def remember(self, diagnosis, exercise, attempt_text: str) -> None:
        self.adopt(diagnosis)
        record = {
            "exercise_id": getattr(exercise, "id", None),
            "attempt": attempt_text,
            "verdict": diagnosis.verdict,
            "diagnosis_id": diagnosis.id,
            "timestamp": time.time(),
        }
        self.history.append(record)
        if self._path:
            with self.lock, self._path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def get_diagnosis(self, diagnosis_id: str):
        return self.diagnoses.get(diagnosis_id)


class SessionStore:
    """Thread-safe id -> session map used by the service."""

    def __init__(self, persist_dir: str | Path | None = None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._persist_dir = persist_dir

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                self._sessions[session_id] = Session(session_id, self._persist_dir)
            return self._sessions[session_id]
