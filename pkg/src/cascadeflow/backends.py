"""Model backends and dataset/artifact file formats.

The gateway and the calibration tools never embed an ML runtime: a model
is either a *replay* backend (precomputed logits in a JSONL file) or a
*remote* one (a minimal POST endpoint).  This module owns every on-disk
schema:

Classification dataset (JSONL, UTF-8, one object per line)::

    {"id": str, "label": int?, "student_logits": [num...],
     "teacher_logits": [num...]?, "teacher_pred": int?,
     "student_cost": num?, "teacher_cost": num?, "cost_unit": "flops"|"ms"?}

Detection dataset (JSONL)::

    {"id": str, "boxes": [{"class_logits": [num...],
                           "reg_samples": [[{"s": num, "q": num}...] x4]?}...],
     "reference": any?}

``reg_samples`` may be omitted per box file-wide for the documented
classification-only detection mode.

Trade-off curve artifact (JSONL): a header line
``{"kind": "tradeoff_curve", "policy": {...}, "dataset_digest": str, "seed": int?}``
followed by one point per line
``{"threshold": num|"-inf"|"inf", "accuracy": num, "expected_cost": num, "student_fraction": num}``.

Histogram artifact (JSONL): header ``{"kind": "histogram", "bins": int, "total": int}``
then one ``{"lo": num, "hi": num, "count": int}`` line per bin.

All numbers in datasets must be finite; NaN/Infinity literals are rejected
at parse time.  Curve thresholds are the one sanctioned exception: the
-inf/+inf grid sentinels are encoded as the strings "-inf"/"inf".
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import httpx

from .calibration import CalibrationRecord, Histogram, TradeoffCurve, TradeoffPoint
from .energy import DetectionBox, DetectionSample, RegressionScoreSample
from .errors import (
    BackendError,
    BackendTimeoutError,
    DatasetError,
    InvalidInputError,
    MalformedResponseError,
    PartialProgressError,
    UnknownIdError,
)
from .routing import RouterPolicy, Specialization

__all__ = [
    "BackendDescriptor",
    "ModelOutput",
    "ReplayBackend",
    "RemoteBackend",
    "open_backend",
    "backend_infer",
    "load_classification_dataset",
    "save_classification_dataset",
    "load_detection_dataset",
    "generate_pseudo_labels",
    "dataset_digest",
    "save_curve",
    "load_curve",
    "save_histogram",
    "policy_to_wire",
    "policy_from_wire",
    "threshold_to_wire",
    "threshold_from_wire",
]


def _reject_constant(name: str) -> float:
    raise ValueError(f"non-finite number {name!r} is not allowed")


def _open_dataset(path: Path):
    try:
        return path.open("r", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc


def _parse_line(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line, parse_constant=_reject_constant)
    except ValueError as exc:
        raise DatasetError(f"invalid JSON: {exc}", line=lineno) from exc
    if not isinstance(obj, dict):
        raise DatasetError("expected a JSON object", line=lineno)
    return obj


def _finite_number(value: Any, what: str, lineno: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DatasetError(f"{what} must be a number", line=lineno)
    v = float(value)
    if not math.isfinite(v):
        raise DatasetError(f"{what} must be finite", line=lineno)
    return v


def _finite_vector(value: Any, what: str, lineno: int) -> tuple[float, ...]:
    if not isinstance(value, list) or len(value) == 0:
        raise DatasetError(f"{what} must be a non-empty array", line=lineno)
    return tuple(_finite_number(v, f"{what}[{i}]", lineno) for i, v in enumerate(value))


# ---------------------------------------------------------------------------
# classification datasets


def load_classification_dataset(path: str | Path) -> list[CalibrationRecord]:
    """Parse and validate a classification JSONL dataset.

    Rejects duplicate ids, inconsistent logit widths, out-of-range labels,
    and any non-finite number, naming the offending line.
    """
    records: list[CalibrationRecord] = []
    seen: set[str] = set()
    student_width: int | None = None
    teacher_width: int | None = None
    path = Path(path)
    with _open_dataset(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            obj = _parse_line(line, lineno)
            rid = obj.get("id")
            if not isinstance(rid, str) or not rid:
                raise DatasetError("missing or empty 'id'", line=lineno)
            if rid in seen:
                raise DatasetError(f"duplicate id {rid!r}", line=lineno)
            seen.add(rid)

            logits = _finite_vector(obj.get("student_logits"), "student_logits", lineno)
            if student_width is None:
                student_width = len(logits)
            elif len(logits) != student_width:
                raise DatasetError(
                    f"student_logits length {len(logits)} != {student_width} used earlier in file",
                    line=lineno,
                )

            teacher_logits = None
            if obj.get("teacher_logits") is not None:
                teacher_logits = _finite_vector(obj["teacher_logits"], "teacher_logits", lineno)
                if teacher_width is None:
                    teacher_width = len(teacher_logits)
                elif len(teacher_logits) != teacher_width:
                    raise DatasetError(
                        f"teacher_logits length {len(teacher_logits)} != {teacher_width} used earlier in file",
                        line=lineno,
                    )

            label = obj.get("label")
            if label is not None:
                if isinstance(label, bool) or not isinstance(label, int):
                    raise DatasetError("label must be an integer", line=lineno)
                label_space = max(len(logits), len(teacher_logits) if teacher_logits else 0)
                if not 0 <= label < label_space:
                    raise DatasetError(f"label {label} outside [0, {label_space})", line=lineno)

            teacher_pred = obj.get("teacher_pred")
            if teacher_pred is not None:
                if isinstance(teacher_pred, bool) or not isinstance(teacher_pred, int):
                    raise DatasetError("teacher_pred must be an integer", line=lineno)
                if teacher_pred < 0 or (teacher_logits is not None and teacher_pred >= len(teacher_logits)):
                    raise DatasetError(f"teacher_pred {teacher_pred} out of range", line=lineno)

            cost_unit = obj.get("cost_unit")
            if cost_unit is not None and cost_unit not in ("flops", "ms"):
                raise DatasetError(f"cost_unit must be 'flops' or 'ms', got {cost_unit!r}", line=lineno)

            student_cost = _finite_number(obj.get("student_cost", 0.0), "student_cost", lineno)
            teacher_cost = _finite_number(obj.get("teacher_cost", 0.0), "teacher_cost", lineno)
            if student_cost < 0 or teacher_cost < 0:
                raise DatasetError("costs must be non-negative", line=lineno)

            records.append(
                CalibrationRecord(
                    id=rid,
                    label=label,
                    student_logits=logits,
                    teacher_logits=teacher_logits,
                    teacher_pred=teacher_pred,
                    student_cost=student_cost,
                    teacher_cost=teacher_cost,
                    cost_unit=cost_unit,
                )
            )
    return records


def _record_to_obj(r: CalibrationRecord) -> dict:
    obj: dict[str, Any] = {"id": r.id}
    if r.label is not None:
        obj["label"] = r.label
    obj["student_logits"] = list(r.student_logits)
    if r.teacher_logits is not None:
        obj["teacher_logits"] = list(r.teacher_logits)
    if r.teacher_pred is not None:
        obj["teacher_pred"] = r.teacher_pred
    if r.student_cost:
        obj["student_cost"] = r.student_cost
    if r.teacher_cost:
        obj["teacher_cost"] = r.teacher_cost
    if r.cost_unit is not None:
        obj["cost_unit"] = r.cost_unit
    return obj


def save_classification_dataset(records: Iterable[CalibrationRecord], path: str | Path) -> int:
    """Write records as JSONL; returns the count written."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(_record_to_obj(r), allow_nan=False) + "\n")
            count += 1
    return count


def dataset_digest(records: Sequence[CalibrationRecord]) -> str:
    """Stable content hash of a record list, for stamping artifacts."""
    h = hashlib.sha256()
    for r in records:
        h.update(json.dumps(_record_to_obj(r), sort_keys=True, allow_nan=False).encode())
        h.update(b"\n")
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# detection datasets


def load_detection_dataset(path: str | Path) -> list[tuple[str, DetectionSample, Any]]:
    """Parse a detection JSONL dataset into (id, sample, reference) tuples."""
    out: list[tuple[str, DetectionSample, Any]] = []
    seen: set[str] = set()
    width: int | None = None
    with _open_dataset(Path(path)) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            obj = _parse_line(line, lineno)
            rid = obj.get("id")
            if not isinstance(rid, str) or not rid:
                raise DatasetError("missing or empty 'id'", line=lineno)
            if rid in seen:
                raise DatasetError(f"duplicate id {rid!r}", line=lineno)
            seen.add(rid)

            boxes_raw = obj.get("boxes")
            if not isinstance(boxes_raw, list) or len(boxes_raw) == 0:
                raise DatasetError("'boxes' must be a non-empty array", line=lineno)
            boxes = []
            for b, box in enumerate(boxes_raw):
                if not isinstance(box, dict):
                    raise DatasetError(f"boxes[{b}] must be an object", line=lineno)
                logits = _finite_vector(box.get("class_logits"), f"boxes[{b}].class_logits", lineno)
                if width is None:
                    width = len(logits)
                elif len(logits) != width:
                    raise DatasetError(
                        f"boxes[{b}].class_logits length {len(logits)} != {width} used earlier in file",
                        line=lineno,
                    )
                reg = box.get("reg_samples")
                reg_samples = None
                if reg is not None:
                    if not isinstance(reg, list) or len(reg) != 4:
                        raise DatasetError(f"boxes[{b}].reg_samples must hold 4 coordinate lists", line=lineno)
                    reg_samples = []
                    for j, coord in enumerate(reg):
                        if not isinstance(coord, list) or len(coord) == 0:
                            raise DatasetError(
                                f"boxes[{b}].reg_samples[{j}] must be a non-empty array", line=lineno
                            )
                        parsed = []
                        for k, s in enumerate(coord):
                            if not isinstance(s, dict) or "s" not in s or "q" not in s:
                                raise DatasetError(
                                    f"boxes[{b}].reg_samples[{j}][{k}] must be an object with 's' and 'q'",
                                    line=lineno,
                                )
                            score = _finite_number(s["s"], f"boxes[{b}].reg_samples[{j}][{k}].s", lineno)
                            q = _finite_number(s["q"], f"boxes[{b}].reg_samples[{j}][{k}].q", lineno)
                            if q <= 0:
                                raise DatasetError(
                                    f"boxes[{b}].reg_samples[{j}][{k}].q must be > 0", line=lineno
                                )
                            parsed.append(RegressionScoreSample(score, q))
                        reg_samples.append(tuple(parsed))
                    reg_samples = tuple(reg_samples)
                boxes.append(DetectionBox(class_logits=logits, reg_samples=reg_samples))
            out.append((rid, DetectionSample(boxes=tuple(boxes)), obj.get("reference")))
    return out


# ---------------------------------------------------------------------------
# backends


@dataclass(frozen=True)
class BackendDescriptor:
    """Where a model lives and what one call costs.

    ``kind`` is "replay" (read ``path``, play back the ``role`` side's
    logits) or "remote" (POST to ``url``).  ``cost`` is the declared
    per-call cost in the dataset's unit; the loader never measures it.
    """

    kind: str
    path: str | None = None
    role: str = "student"
    url: str | None = None
    timeout_ms: float = 5000.0
    cost: float = 0.0
    task: str = "classification"

    def __post_init__(self):
        if self.kind not in ("replay", "remote"):
            raise InvalidInputError(f"unknown backend kind {self.kind!r}")
        if self.kind == "replay" and not self.path:
            raise InvalidInputError("replay backend needs a dataset path")
        if self.kind == "remote" and not self.url:
            raise InvalidInputError("remote backend needs a base URL")
        if self.role not in ("student", "teacher"):
            raise InvalidInputError(f"role must be 'student' or 'teacher', got {self.role!r}")
        if self.timeout_ms <= 0:
            raise InvalidInputError("timeout_ms must be > 0")
        if self.cost < 0:
            raise InvalidInputError("cost must be non-negative")
        if self.task not in ("classification", "detection"):
            raise InvalidInputError(f"task must be 'classification' or 'detection', got {self.task!r}")

    @classmethod
    def from_obj(cls, obj: dict) -> "BackendDescriptor":
        allowed = {"kind", "path", "role", "url", "timeout_ms", "cost", "task"}
        unknown = set(obj) - allowed
        if unknown:
            raise InvalidInputError(f"unknown backend descriptor fields: {sorted(unknown)}")
        return cls(**obj)

    def to_obj(self) -> dict:
        obj: dict[str, Any] = {"kind": self.kind, "role": self.role, "cost": self.cost, "task": self.task}
        if self.path is not None:
            obj["path"] = self.path
        if self.url is not None:
            obj["url"] = self.url
        if self.kind == "remote":
            obj["timeout_ms"] = self.timeout_ms
        return obj


@dataclass(frozen=True)
class ModelOutput:
    """One model answer: classification logits or a detection sample, plus latency."""

    task: str
    prediction: Any
    logits: Sequence[float] | None = None
    detection: DetectionSample | None = None
    measured_latency_ms: float = 0.0
    cost: float = 0.0

    def __post_init__(self):
        if (self.logits is None) == (self.detection is None):
            raise InvalidInputError("exactly one of logits/detection must be set")
        if self.task == "classification" and self.logits is None:
            raise InvalidInputError("classification output needs logits")
        if self.task == "detection" and self.detection is None:
            raise InvalidInputError("detection output needs a detection sample")


def _argmax(values: Sequence[float]) -> int:
    best, best_i = None, 0
    for i, v in enumerate(values):
        if best is None or v > best:
            best, best_i = v, i
    return best_i


class ReplayBackend:
    """Serves stored model outputs by sample id; deterministic and read-only."""

    def __init__(self, descriptor: BackendDescriptor):
        if descriptor.kind != "replay":
            raise InvalidInputError("ReplayBackend needs a replay descriptor")
        self.descriptor = descriptor
        if descriptor.task == "detection":
            self._detection = {rid: sample for rid, sample, _ in load_detection_dataset(descriptor.path)}
            self._records = {}
        else:
            self._records = {r.id: r for r in load_classification_dataset(descriptor.path)}
            self._detection = {}

    def infer(self, sample_id: str | None = None, payload: Any = None) -> ModelOutput:
        if sample_id is None:
            raise UnknownIdError("replay backend requires a sample id")
        if self.descriptor.task == "detection":
            sample = self._detection.get(sample_id)
            if sample is None:
                raise UnknownIdError(f"unknown sample id {sample_id!r}")
            prediction = [_argmax(b.class_logits) for b in sample.boxes]
            return ModelOutput(
                task="detection",
                prediction=prediction,
                detection=sample,
                measured_latency_ms=0.0,
                cost=self.descriptor.cost,
            )
        record = self._records.get(sample_id)
        if record is None:
            raise UnknownIdError(f"unknown sample id {sample_id!r}")
        if self.descriptor.role == "teacher":
            if record.teacher_logits is None and record.teacher_pred is None:
                raise UnknownIdError(f"record {sample_id!r} carries no teacher output")
            logits = record.teacher_logits if record.teacher_logits is not None else record.student_logits
            prediction = record.teacher_prediction()
        else:
            logits = record.student_logits
            prediction = _argmax(record.student_logits)
        return ModelOutput(
            task="classification",
            prediction=prediction,
            logits=logits,
            measured_latency_ms=0.0,
            cost=self.descriptor.cost,
        )


class RemoteBackend:
    """POSTs {"id", "input"} to a remote model endpoint and parses the wire schema."""

    def __init__(self, descriptor: BackendDescriptor, client: httpx.Client | None = None):
        if descriptor.kind != "remote":
            raise InvalidInputError("RemoteBackend needs a remote descriptor")
        self.descriptor = descriptor
        self._client = client or httpx.Client(timeout=descriptor.timeout_ms / 1000.0)

    def infer(self, sample_id: str | None = None, payload: Any = None) -> ModelOutput:
        body = {"id": sample_id, "input": payload}
        start = time.perf_counter()
        try:
            resp = self._client.post(self.descriptor.url, json=body)
        except httpx.TimeoutException as exc:
            raise BackendTimeoutError(f"backend {self.descriptor.url} timed out") from exc
        except httpx.HTTPError as exc:
            raise BackendError(f"backend {self.descriptor.url} failed: {exc}") from exc
        latency_ms = (time.perf_counter() - start) * 1000.0
        if resp.status_code != 200:
            raise BackendError(f"backend {self.descriptor.url} returned HTTP {resp.status_code}")
        try:
            obj = resp.json()
        except ValueError as exc:
            raise MalformedResponseError(f"backend {self.descriptor.url} sent non-JSON body") from exc
        return self._parse(obj, latency_ms)

    def _parse(self, obj: Any, latency_ms: float) -> ModelOutput:
        if not isinstance(obj, dict):
            raise MalformedResponseError("response must be a JSON object")
        task = obj.get("task")
        if task == "classification":
            logits = obj.get("logits")
            if not isinstance(logits, list) or not logits:
                raise MalformedResponseError("classification response needs a 'logits' array")
            try:
                vec = tuple(float(v) for v in logits)
            except (TypeError, ValueError) as exc:
                raise MalformedResponseError("logits must be numbers") from exc
            if not all(math.isfinite(v) for v in vec):
                raise MalformedResponseError("logits must be finite")
            prediction = obj.get("prediction")
            if prediction is None:
                prediction = _argmax(vec)
            return ModelOutput(
                task="classification",
                prediction=prediction,
                logits=vec,
                measured_latency_ms=latency_ms,
                cost=self.descriptor.cost,
            )
        if task == "detection":
            det = obj.get("detection")
            if not isinstance(det, dict) or not isinstance(det.get("boxes"), list) or not det["boxes"]:
                raise MalformedResponseError("detection response needs detection.boxes")
            boxes = []
            for box in det["boxes"]:
                if not isinstance(box, dict) or not isinstance(box.get("class_logits"), list):
                    raise MalformedResponseError("each box needs class_logits")
                logits = tuple(float(v) for v in box["class_logits"])
                reg = box.get("reg_samples")
                reg_samples = None
                if reg is not None:
                    if not isinstance(reg, list) or len(reg) != 4:
                        raise MalformedResponseError("reg_samples must hold 4 coordinate lists")
                    reg_samples = tuple(
                        tuple(RegressionScoreSample(float(s["s"]), float(s["q"])) for s in coord)
                        for coord in reg
                    )
                boxes.append(DetectionBox(class_logits=logits, reg_samples=reg_samples))
            sample = DetectionSample(boxes=tuple(boxes))
            prediction = obj.get("prediction")
            if prediction is None:
                prediction = [_argmax(b.class_logits) for b in sample.boxes]
            return ModelOutput(
                task="detection",
                prediction=prediction,
                detection=sample,
                measured_latency_ms=latency_ms,
                cost=self.descriptor.cost,
            )
        raise MalformedResponseError(f"unknown task {task!r} in response")


def open_backend(descriptor: BackendDescriptor) -> ReplayBackend | RemoteBackend:
    if descriptor.kind == "replay":
        return ReplayBackend(descriptor)
    return RemoteBackend(descriptor)


def backend_infer(
    backend: BackendDescriptor | ReplayBackend | RemoteBackend,
    sample_id: str | None = None,
    payload: Any = None,
) -> ModelOutput:
    """One inference call; accepts a descriptor (opened on the fly) or an open backend."""
    if isinstance(backend, BackendDescriptor):
        backend = open_backend(backend)
    return backend.infer(sample_id=sample_id, payload=payload)


# ---------------------------------------------------------------------------
# pseudo-labeling


def generate_pseudo_labels(
    in_path: str | Path,
    teacher: BackendDescriptor | ReplayBackend | RemoteBackend,
    out_path: str | Path,
) -> int:
    """Label a dataset with the Teacher's argmax; returns the count written.

    The output keeps each record's student logits and costs, sets
    ``label`` to the Teacher's argmax, and stores the Teacher logits for
    later calibration.  A backend failure aborts with the completed count.
    """
    records = load_classification_dataset(in_path)
    if isinstance(teacher, BackendDescriptor):
        teacher = open_backend(teacher)
    written = 0
    with Path(out_path).open("w", encoding="utf-8") as fh:
        for r in records:
            try:
                out = teacher.infer(sample_id=r.id)
            except BackendError as exc:
                raise PartialProgressError("teacher backend failed", completed=written, cause=exc) from exc
            if out.logits is None:
                raise PartialProgressError(
                    "teacher returned no logits", completed=written
                )
            label = _argmax(out.logits)
            labeled = CalibrationRecord(
                id=r.id,
                label=label,
                student_logits=r.student_logits,
                teacher_logits=tuple(out.logits),
                teacher_pred=label,
                student_cost=r.student_cost,
                teacher_cost=r.teacher_cost,
                cost_unit=r.cost_unit,
            )
            fh.write(json.dumps(_record_to_obj(labeled), allow_nan=False) + "\n")
            written += 1
    return written


# ---------------------------------------------------------------------------
# wire helpers and artifacts


def threshold_to_wire(t: float) -> float | str:
    if math.isinf(t):
        return "inf" if t > 0 else "-inf"
    return float(t)


def threshold_from_wire(v: Any) -> float:
    if isinstance(v, str):
        if v in ("inf", "+inf", "Infinity"):
            return math.inf
        if v in ("-inf", "-Infinity"):
            return -math.inf
        raise InvalidInputError(f"bad threshold string {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidInputError("threshold must be a number or '-inf'/'inf'")
    t = float(v)
    if math.isnan(t):
        raise InvalidInputError("threshold must not be NaN")
    return t


def policy_to_wire(policy: RouterPolicy) -> dict:
    obj: dict[str, Any] = {
        "score_type": policy.score_type,
        "threshold": threshold_to_wire(policy.threshold),
        "random_rate": policy.random_rate,
    }
    if policy.specialization is not None:
        obj["specialization"] = {
            "cbar": policy.specialization.cbar,
            "extra_index": policy.specialization.extra_index,
        }
    return obj


def policy_from_wire(obj: dict, base: RouterPolicy | None = None) -> RouterPolicy:
    """Build a policy from wire JSON; ``base`` supplies fields a partial update omits."""
    if not isinstance(obj, dict):
        raise InvalidInputError("policy must be a JSON object")
    allowed = {"score_type", "threshold", "random_rate", "specialization"}
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidInputError(f"unknown policy fields: {sorted(unknown)}")
    base = base or RouterPolicy()
    spec = base.specialization
    if "specialization" in obj:
        raw = obj["specialization"]
        if raw is None:
            spec = None
        else:
            spec = Specialization(cbar=int(raw["cbar"]), extra_index=raw.get("extra_index"))
    return RouterPolicy(
        score_type=obj.get("score_type", base.score_type),
        threshold=threshold_from_wire(obj["threshold"]) if "threshold" in obj else base.threshold,
        random_rate=float(obj.get("random_rate", base.random_rate)),
        specialization=spec,
    )


def curve_to_wire(curve: TradeoffCurve) -> dict:
    return {
        "kind": "tradeoff_curve",
        "policy": policy_to_wire(curve.policy),
        "dataset_digest": curve.dataset_digest,
        "seed": curve.seed,
        "points": [
            {
                "threshold": threshold_to_wire(p.threshold),
                "accuracy": p.accuracy,
                "expected_cost": p.expected_cost,
                "student_fraction": p.student_fraction,
            }
            for p in curve.points
        ],
    }


def curve_from_wire(obj: dict) -> TradeoffCurve:
    if not isinstance(obj, dict) or obj.get("kind") != "tradeoff_curve":
        raise InvalidInputError("not a tradeoff_curve object")
    points = tuple(
        TradeoffPoint(
            threshold=threshold_from_wire(p["threshold"]),
            accuracy=float(p["accuracy"]),
            expected_cost=float(p["expected_cost"]),
            student_fraction=float(p["student_fraction"]),
        )
        for p in obj.get("points", [])
    )
    return TradeoffCurve(
        points=points,
        policy=policy_from_wire(obj.get("policy", {})),
        dataset_digest=obj.get("dataset_digest", ""),
        seed=obj.get("seed"),
    )


def save_curve(curve: TradeoffCurve, path: str | Path) -> None:
    """Write a curve artifact: one header line, then one point per line."""
    wire = curve_to_wire(curve)
    points = wire.pop("points")
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(wire, allow_nan=False) + "\n")
        for p in points:
            fh.write(json.dumps(p, allow_nan=False) + "\n")


def load_curve(path: str | Path) -> TradeoffCurve:
    with Path(path).open("r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DatasetError("empty curve artifact")
    header = _parse_line(lines[0], 1)
    header["points"] = [_parse_line(ln, i + 2) for i, ln in enumerate(lines[1:])]
    return curve_from_wire(header)


def save_histogram(hist: Histogram, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(
            json.dumps({"kind": "histogram", "bins": len(hist.counts), "total": hist.total}, allow_nan=False)
            + "\n"
        )
        for lo, hi, count in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
            fh.write(json.dumps({"lo": lo, "hi": hi, "count": count}, allow_nan=False) + "\n")
