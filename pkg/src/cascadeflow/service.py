"""Live cascade gateway.

Every request runs the Student first, scores its output, and either
answers from the Student or escalates to the Teacher.  The routing policy
is a runtime knob: configuration lives in one immutable object swapped
atomically, so a request sees exactly one config from score to response.
Statistics accumulate under a lock, and completed requests fan out to
server-sent-event subscribers without ever blocking the request path.

Thresholds of -inf/+inf cross the HTTP boundary as the strings
"-inf"/"inf"; everything else on the wire is plain JSON.
"""

from __future__ import annotations

import json
import math
import queue
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from fastapi import Body, FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .backends import (
    BackendDescriptor,
    backend_infer,
    curve_from_wire,
    curve_to_wire,
    load_curve,
    open_backend,
    policy_from_wire,
    policy_to_wire,
    threshold_to_wire,
)
from .calibration import TradeoffCurve, expected_cost
from .energy import detection_total_energy
from .errors import (
    BackendError,
    CascadeflowError,
    ConfigurationError,
    InvalidInputError,
    UnknownIdError,
)
from .routing import RouterPolicy, STUDENT, TEACHER, policy_score, route, route_specialized

__all__ = [
    "GatewayConfig",
    "Gateway",
    "create_app",
    "config_to_wire",
    "config_from_wire",
    "load_gateway_config",
    "DEFAULT_HISTOGRAM_EDGES",
]

# Unit-width score bins over [-10, 10); out-of-range scores land in the
# underflow/overflow buckets so counts always sum to the total.
DEFAULT_HISTOGRAM_EDGES = tuple(float(v) for v in range(-10, 11))


@dataclass(frozen=True)
class GatewayConfig:
    """Everything the gateway needs: policy, backends, and serving options."""

    policy: RouterPolicy
    student: BackendDescriptor
    teacher: BackendDescriptor
    task: str = "classification"
    degraded_mode: str = "fail"
    histogram_edges: Sequence[float] = DEFAULT_HISTOGRAM_EDGES
    curve_path: str | None = None
    seed: int | None = None
    host: str = "127.0.0.1"
    port: int = 8080
    console_dir: str | None = None

    def __post_init__(self):
        if self.task not in ("classification", "detection"):
            raise ConfigurationError(f"task must be 'classification' or 'detection', got {self.task!r}")
        if self.degraded_mode not in ("fail", "student_only"):
            raise ConfigurationError(
                f"degraded_mode must be 'fail' or 'student_only', got {self.degraded_mode!r}"
            )
        edges = tuple(float(e) for e in self.histogram_edges)
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigurationError("histogram_edges must be at least 2 strictly increasing numbers")
        if any(not math.isfinite(e) for e in edges):
            raise ConfigurationError("histogram_edges must be finite")
        object.__setattr__(self, "histogram_edges", edges)
        if self.policy.specialization is not None and self.task != "classification":
            raise ConfigurationError("specialization applies to classification only")
        if not 0 < self.port < 65536:
            raise ConfigurationError(f"port out of range: {self.port}")


def config_to_wire(config: GatewayConfig) -> dict:
    return {
        "policy": policy_to_wire(config.policy),
        "student": config.student.to_obj(),
        "teacher": config.teacher.to_obj(),
        "task": config.task,
        "degraded_mode": config.degraded_mode,
        "histogram_edges": list(config.histogram_edges),
        "curve_path": config.curve_path,
        "seed": config.seed,
        "host": config.host,
        "port": config.port,
        "console_dir": config.console_dir,
    }


def config_from_wire(obj: dict, base: GatewayConfig | None = None) -> GatewayConfig:
    """Build a config from wire JSON; ``base`` supplies anything a partial update omits."""
    if not isinstance(obj, dict):
        raise ConfigurationError("config must be a JSON object")
    allowed = {
        "policy",
        "student",
        "teacher",
        "task",
        "degraded_mode",
        "histogram_edges",
        "curve_path",
        "seed",
        "host",
        "port",
        "console_dir",
    }
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")

    policy = policy_from_wire(obj["policy"], base=base.policy if base else None) if "policy" in obj else (
        base.policy if base else None
    )
    if policy is None:
        raise ConfigurationError("config needs a policy")

    def descriptor(key: str) -> BackendDescriptor | None:
        if key in obj:
            return BackendDescriptor.from_obj(obj[key])
        return getattr(base, key) if base else None

    student = descriptor("student")
    teacher = descriptor("teacher")
    if student is None or teacher is None:
        raise ConfigurationError("config needs both student and teacher backends")

    def field(key: str, default: Any) -> Any:
        if key in obj:
            return obj[key]
        return getattr(base, key) if base else default

    return GatewayConfig(
        policy=policy,
        student=student,
        teacher=teacher,
        task=field("task", "classification"),
        degraded_mode=field("degraded_mode", "fail"),
        histogram_edges=field("histogram_edges", DEFAULT_HISTOGRAM_EDGES),
        curve_path=field("curve_path", None),
        seed=field("seed", None),
        host=field("host", "127.0.0.1"),
        port=field("port", 8080),
        console_dir=field("console_dir", None),
    )


def load_gateway_config(path: str | Path) -> GatewayConfig:
    with Path(path).open("r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except ValueError as exc:
            raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
    return config_from_wire(obj)


class _ScoreHistogram:
    """Fixed-edge score counts; out-of-range scores go to underflow/overflow."""

    def __init__(self, edges: Sequence[float]):
        self.edges = np.asarray(edges, dtype=np.float64)
        self.counts = [0] * (len(edges) - 1)
        self.underflow = 0
        self.overflow = 0

    def add(self, score: float) -> None:
        idx = int(np.searchsorted(self.edges, score, side="right")) - 1
        if idx < 0:
            self.underflow += 1
        elif idx >= len(self.counts):
            self.overflow += 1
        else:
            self.counts[idx] += 1

    def to_obj(self) -> dict:
        return {
            "edges": [float(e) for e in self.edges],
            "counts": list(self.counts),
            "underflow": self.underflow,
            "overflow": self.overflow,
        }


class _Stats:
    def __init__(self, edges: Sequence[float]):
        self._lock = threading.Lock()
        self._edges = tuple(edges)
        self._zero()

    def _zero(self) -> None:
        self.total = 0
        self.student_count = 0
        self.teacher_count = 0
        self._student_latency_sum = 0.0
        self._total_latency_sum = 0.0
        self._hist = _ScoreHistogram(self._edges)

    def record(self, routed_to: str, score: float, student_ms: float, total_ms: float) -> None:
        with self._lock:
            self.total += 1
            if routed_to == STUDENT:
                self.student_count += 1
            else:
                self.teacher_count += 1
            self._student_latency_sum += student_ms
            self._total_latency_sum += total_ms
            self._hist.add(score)

    def reset(self, edges: Sequence[float] | None = None) -> None:
        with self._lock:
            if edges is not None:
                self._edges = tuple(edges)
            self._zero()

    def rebin(self, edges: Sequence[float]) -> None:
        # Counts with other edges are not mergeable; a bin change restarts the histogram only.
        with self._lock:
            if tuple(edges) != self._edges:
                self._edges = tuple(edges)
                self._hist = _ScoreHistogram(self._edges)

    def snapshot(self, student_cost: float, teacher_cost: float) -> dict:
        with self._lock:
            total = self.total
            return {
                "total": total,
                "student_count": self.student_count,
                "teacher_count": self.teacher_count,
                "student_fraction": self.student_count / total if total else 0.0,
                "mean_student_latency_ms": self._student_latency_sum / total if total else 0.0,
                "mean_total_latency_ms": self._total_latency_sum / total if total else 0.0,
                "estimated_cost": (
                    expected_cost(self.student_count, self.teacher_count, student_cost, teacher_cost)
                    if total
                    else 0.0
                ),
                "histogram": self._hist.to_obj(),
            }


class _Subscriber:
    def __init__(self, capacity: int):
        self.queue: queue.Queue[dict] = queue.Queue(maxsize=capacity)
        self.dropped = False


class _EventHub:
    """Fan-out of routing events; a full subscriber queue marks it dropped, never blocks."""

    def __init__(self, capacity: int = 256):
        self._lock = threading.Lock()
        self._subscribers: list[_Subscriber] = []
        self._capacity = capacity

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber(self._capacity)
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def publish(self, event: dict) -> None:
        with self._lock:
            subs = list(self._subscribers)
        for sub in subs:
            if sub.dropped:
                continue
            try:
                sub.queue.put_nowait(event)
            except queue.Full:
                sub.dropped = True


def _finite_logits(raw: Any) -> tuple[float, ...]:
    if not isinstance(raw, list) or not raw:
        raise InvalidInputError("'logits' must be a non-empty array")
    try:
        vec = tuple(float(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError("'logits' must be numbers") from exc
    if not all(math.isfinite(v) for v in vec):
        raise InvalidInputError("'logits' must be finite")
    return vec


class Gateway:
    """Request-path state machine behind the HTTP app; usable directly in tests."""

    def __init__(self, config: GatewayConfig, curve: TradeoffCurve | None = None):
        self.config = config
        self.stats = _Stats(config.histogram_edges)
        self.events = _EventHub()
        self._backends: dict[BackendDescriptor, Any] = {}
        self._backend_lock = threading.Lock()
        self._rng = np.random.default_rng(config.seed)
        self._rng_lock = threading.Lock()
        self.curve = curve
        if self.curve is None and config.curve_path:
            self.curve = load_curve(config.curve_path)
        # Opening both backends up front surfaces bad paths/URLs at startup.
        self._backend_for(config.student)
        self._backend_for(config.teacher)

    def _backend_for(self, descriptor: BackendDescriptor):
        with self._backend_lock:
            backend = self._backends.get(descriptor)
            if backend is None:
                backend = open_backend(descriptor)
                self._backends[descriptor] = backend
            return backend

    def _draw(self) -> float:
        with self._rng_lock:
            return float(self._rng.uniform())

    def apply_config(self, new: GatewayConfig) -> None:
        """Validate side effects (backend open), then swap atomically."""
        self._backend_for(new.student)
        self._backend_for(new.teacher)
        old = self.config
        if new.seed != old.seed:
            with self._rng_lock:
                self._rng = np.random.default_rng(new.seed)
        self.stats.rebin(new.histogram_edges)
        self.config = new

    def infer(self, body: dict) -> dict:
        cfg = self.config  # one immutable snapshot decides this whole request
        sample_id = body.get("id")
        if sample_id is not None and not isinstance(sample_id, str):
            raise InvalidInputError("'id' must be a string")

        student_ms = 0.0
        detection = None
        logits: tuple[float, ...] | None = None
        if body.get("logits") is not None:
            if cfg.task != "classification":
                raise InvalidInputError("direct-logits requests need a classification gateway")
            logits = _finite_logits(body["logits"])
            student_pred: Any = int(np.argmax(np.asarray(logits)))
        else:
            backend = self._backend_for(cfg.student)
            start = time.perf_counter()
            out = backend.infer(sample_id=sample_id, payload=body.get("input"))
            student_ms = (time.perf_counter() - start) * 1000.0
            student_pred = out.prediction
            logits = tuple(out.logits) if out.logits is not None else None
            detection = out.detection

        if cfg.task == "detection":
            if detection is None:
                raise InvalidInputError("detection gateway got a classification response")
            base_score = -detection_total_energy(detection)
            decision = (
                route(0.0, cfg.policy, rng_draw=self._draw())
                if cfg.policy.score_type == "random"
                else route(base_score, cfg.policy)
            )
        else:
            if logits is None:
                raise InvalidInputError("classification gateway got a detection response")
            if cfg.policy.score_type == "random":
                decision = route(0.0, cfg.policy, rng_draw=self._draw())
            elif cfg.policy.specialization is not None:
                decision = route_specialized(logits, cfg.policy)
            else:
                decision = route(policy_score(logits, cfg.policy), cfg.policy)

        response: dict[str, Any] = {
            "route": decision.target,
            "score": decision.score,
            "threshold": threshold_to_wire(decision.threshold_used),
            "student_latency_ms": student_ms,
        }
        teacher_ms = None
        if decision.target == TEACHER:
            backend = self._backend_for(cfg.teacher)
            start = time.perf_counter()
            try:
                out = backend.infer(sample_id=sample_id, payload=body.get("input"))
                response["prediction"] = out.prediction
            except BackendError as exc:
                if cfg.degraded_mode == "fail":
                    # the client's id was already resolved by the Student, so
                    # even an unknown-id miss here is a teacher-side failure
                    raise BackendError(f"teacher backend failed: {exc}") from exc
                response["prediction"] = student_pred
                response["degraded"] = True
            teacher_ms = (time.perf_counter() - start) * 1000.0
            response["teacher_latency_ms"] = teacher_ms
        else:
            response["prediction"] = student_pred

        total_ms = student_ms + (teacher_ms or 0.0)
        self.stats.record(decision.target, decision.score, student_ms, total_ms)
        self.events.publish(
            {
                "type": "route",
                "id": sample_id,
                "route": decision.target,
                "score": decision.score,
                "latency_ms": total_ms,
            }
        )
        return response

    def stats_snapshot(self) -> dict:
        cfg = self.config
        return self.stats.snapshot(cfg.student.cost, cfg.teacher.cost)


def _error_response(exc: Exception) -> JSONResponse:
    if isinstance(exc, UnknownIdError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})
    if isinstance(exc, BackendError):
        return JSONResponse(status_code=502, content={"detail": str(exc)})
    return JSONResponse(status_code=400, content={"detail": str(exc)})


def create_app(
    config: GatewayConfig,
    curve: TradeoffCurve | None = None,
) -> FastAPI:
    gateway = Gateway(config, curve=curve)
    app = FastAPI(title="cascadeflow gateway", docs_url=None, redoc_url=None)
    app.state.gateway = gateway
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.post("/v1/infer")
    def post_infer(body: dict = Body(...)):
        try:
            return gateway.infer(body)
        except CascadeflowError as exc:
            return _error_response(exc)

    @app.get("/v1/config")
    def get_config():
        return config_to_wire(gateway.config)

    @app.put("/v1/config")
    def put_config(body: dict = Body(...)):
        try:
            new = config_from_wire(body, base=gateway.config)
            gateway.apply_config(new)
        except CascadeflowError as exc:
            return _error_response(exc)
        return config_to_wire(gateway.config)

    @app.get("/v1/stats")
    def get_stats():
        return gateway.stats_snapshot()

    @app.post("/v1/stats/reset")
    def post_stats_reset():
        gateway.stats.reset(gateway.config.histogram_edges)
        return gateway.stats_snapshot()

    @app.get("/v1/curve")
    def get_curve():
        if gateway.curve is None:
            return JSONResponse(status_code=404, content={"detail": "no curve loaded"})
        return curve_to_wire(gateway.curve)

    @app.put("/v1/curve")
    def put_curve(body: dict = Body(...)):
        try:
            gateway.curve = curve_from_wire(body)
        except (CascadeflowError, KeyError, TypeError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"detail": f"bad curve: {exc}"})
        return {"points": len(gateway.curve.points)}

    @app.get("/v1/events")
    def get_events():
        sub = gateway.events.subscribe()

        def stream():
            try:
                yield "data: " + json.dumps({"type": "hello"}) + "\n\n"
                while True:
                    if sub.dropped:
                        yield "data: " + json.dumps({"type": "drop", "reason": "subscriber too slow"}) + "\n\n"
                        return
                    try:
                        event = sub.queue.get(timeout=0.5)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield "data: " + json.dumps(event) + "\n\n"
            finally:
                gateway.events.unsubscribe(sub)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    if config.console_dir and Path(config.console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=config.console_dir, html=True), name="console")

    return app
