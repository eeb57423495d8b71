"""Shared fixtures: dataset builders and a live gateway server."""

from __future__ import annotations

import contextlib
import json
import socket
import threading
import time

import pytest
import uvicorn

from cascadeflow import CalibrationRecord, save_classification_dataset


def make_record(
    i: int,
    logits,
    label: int | None = None,
    teacher_pred: int | None = None,
    teacher_logits=None,
    student_cost: float = 1.0,
    teacher_cost: float = 4.0,
) -> CalibrationRecord:
    return CalibrationRecord(
        id=f"r{i}",
        label=label,
        student_logits=tuple(float(v) for v in logits),
        teacher_logits=tuple(float(v) for v in teacher_logits) if teacher_logits is not None else None,
        teacher_pred=teacher_pred,
        student_cost=student_cost,
        teacher_cost=teacher_cost,
    )


@pytest.fixture
def write_dataset(tmp_path):
    """Writes records (or raw dicts) to a JSONL file and returns its path."""

    def _write(items, name="data.jsonl"):
        path = tmp_path / name
        if items and isinstance(items[0], CalibrationRecord):
            save_classification_dataset(items, path)
        else:
            with path.open("w", encoding="utf-8") as fh:
                for obj in items:
                    fh.write(obj if isinstance(obj, str) else json.dumps(obj))
                    fh.write("\n")
        return path

    return _write


def free_port() -> int:
    with contextlib.closing(socket.socket()) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """uvicorn in a daemon thread, torn down by flipping should_exit."""

    def __init__(self, app, port: int):
        self.port = port
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self):
        self._thread.start()
        deadline = time.time() + 10.0
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start within 10 s")
            time.sleep(0.02)
        return self

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10.0)


@pytest.fixture
def live_server():
    """Context-manager factory: run a FastAPI app on a real port for SSE tests."""

    def _factory(app):
        return LiveServer(app, free_port())

    return _factory
