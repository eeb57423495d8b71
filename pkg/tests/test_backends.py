"""Dataset IO, replay/remote backends, pseudo-labeling, and artifacts."""

from __future__ import annotations

import json
import math

import httpx
import numpy as np
import pytest

from cascadeflow import (
    BackendDescriptor,
    BackendError,
    BackendTimeoutError,
    CalibrationRecord,
    DatasetError,
    InvalidInputError,
    MalformedResponseError,
    PartialProgressError,
    RemoteBackend,
    ReplayBackend,
    RouterPolicy,
    Specialization,
    TradeoffCurve,
    TradeoffPoint,
    UnknownIdError,
    backend_infer,
    dataset_digest,
    export_histogram,
    generate_pseudo_labels,
    load_classification_dataset,
    load_curve,
    load_detection_dataset,
    open_backend,
    save_classification_dataset,
    save_curve,
    save_histogram,
)
from cascadeflow.backends import (
    policy_from_wire,
    policy_to_wire,
    threshold_from_wire,
    threshold_to_wire,
)
from conftest import make_record


class TestClassificationDatasetIO:
    def test_round_trip_preserves_every_field(self, tmp_path):
        records = [
            CalibrationRecord(
                id="a",
                label=1,
                student_logits=(0.5, -1.25),
                teacher_logits=(2.0, 3.0),
                teacher_pred=1,
                student_cost=1.5,
                teacher_cost=8.0,
                cost_unit="flops",
            ),
            CalibrationRecord(id="b", student_logits=(0.0, 4.0)),
        ]
        path = tmp_path / "round.jsonl"
        assert save_classification_dataset(records, path) == 2
        assert load_classification_dataset(path) == records

    def test_blank_lines_are_skipped(self, write_dataset):
        path = write_dataset(
            [
                json.dumps({"id": "a", "student_logits": [1.0, 2.0]}),
                "",
                json.dumps({"id": "b", "student_logits": [3.0, 4.0]}),
            ]
        )
        assert [r.id for r in load_classification_dataset(path)] == ["a", "b"]

    @pytest.mark.parametrize(
        "bad_line, fragment",
        [
            ("{not json", "invalid JSON"),
            ('["not", "an", "object"]', "object"),
            ('{"student_logits": [1.0]}', "id"),
            ('{"id": "a", "student_logits": []}', "non-empty"),
            ('{"id": "a", "student_logits": [1.0, NaN]}', "non-finite"),
            ('{"id": "a", "student_logits": [1.0, Infinity]}', "non-finite"),
            ('{"id": "a", "student_logits": [1.0, "x"]}', "number"),
            ('{"id": "a", "student_logits": [1.0, 2.0], "label": 2}', "label"),
            ('{"id": "a", "student_logits": [1.0, 2.0], "label": true}', "label"),
            (
                '{"id": "a", "student_logits": [1.0, 2.0], "teacher_logits": [0.5, 1.5], "teacher_pred": 9}',
                "teacher_pred",
            ),
            ('{"id": "a", "student_logits": [1.0, 2.0], "cost_unit": "joules"}', "cost_unit"),
            ('{"id": "a", "student_logits": [1.0, 2.0], "student_cost": -1}', "non-negative"),
        ],
    )
    def test_bad_second_line_is_reported_with_its_number(self, write_dataset, bad_line, fragment):
        path = write_dataset([json.dumps({"id": "ok", "student_logits": [1.0, 2.0]}), bad_line])
        with pytest.raises(DatasetError, match="line 2") as err:
            load_classification_dataset(path)
        assert fragment in str(err.value)

    def test_teacher_pred_needs_teacher_range_only_when_known(self, write_dataset):
        path = write_dataset(
            [json.dumps({"id": "a", "student_logits": [1.0, 2.0], "teacher_pred": 7})]
        )
        # no teacher_logits: any non-negative index may be valid in the
        # Teacher's (unknown, possibly larger) class space
        assert load_classification_dataset(path)[0].teacher_pred == 7

    def test_label_may_live_in_the_larger_teacher_space(self, write_dataset):
        path = write_dataset(
            [
                json.dumps(
                    {
                        "id": "a",
                        "student_logits": [1.0, 2.0],
                        "teacher_logits": [0.0, 1.0, 2.0, 3.0],
                        "label": 3,
                    }
                )
            ]
        )
        assert load_classification_dataset(path)[0].label == 3

    def test_duplicate_ids_rejected(self, write_dataset):
        row = json.dumps({"id": "dup", "student_logits": [1.0, 2.0]})
        path = write_dataset([row, row])
        with pytest.raises(DatasetError, match="line 2.*duplicate"):
            load_classification_dataset(path)

    def test_inconsistent_widths_rejected(self, write_dataset):
        path = write_dataset(
            [
                json.dumps({"id": "a", "student_logits": [1.0, 2.0]}),
                json.dumps({"id": "b", "student_logits": [1.0, 2.0, 3.0]}),
            ]
        )
        with pytest.raises(DatasetError, match="line 2"):
            load_classification_dataset(path)


class TestDatasetDigest:
    def test_digest_is_content_and_order_sensitive(self):
        a = make_record(0, [1.0, 2.0], label=0, teacher_pred=0)
        b = make_record(1, [3.0, 4.0], label=1, teacher_pred=1)
        assert dataset_digest([a, b]) == dataset_digest([a, b])
        assert dataset_digest([a, b]) != dataset_digest([b, a])
        changed = make_record(0, [1.0, 2.5], label=0, teacher_pred=0)
        assert dataset_digest([a, b]) != dataset_digest([changed, b])


class TestDetectionDatasetIO:
    def _row(self, rid="d0", reg=None, reference=None):
        box = {"class_logits": [1.0, 0.0]}
        if reg is not None:
            box["reg_samples"] = reg
        obj = {"id": rid, "boxes": [box]}
        if reference is not None:
            obj["reference"] = reference
        return json.dumps(obj)

    def test_load_with_and_without_regression_samples(self, write_dataset):
        reg = [[{"s": 0.1, "q": 1.0}]] * 4
        path = write_dataset([self._row("a", reg=reg, reference={"note": 1}), self._row("b")])
        rows = load_detection_dataset(path)
        assert [rid for rid, _, _ in rows] == ["a", "b"]
        assert rows[0][1].boxes[0].reg_samples is not None
        assert rows[0][2] == {"note": 1}
        assert rows[1][1].boxes[0].reg_samples is None

    @pytest.mark.parametrize(
        "reg, fragment",
        [
            ([[{"s": 0.1, "q": 1.0}]] * 3, "4 coordinate"),
            ([[{"s": 0.1, "q": 0.0}]] * 4, "> 0"),
            ([[{"s": 0.1}]] * 4, "'s' and 'q'"),
            ([[]] * 4, "non-empty"),
        ],
    )
    def test_bad_regression_samples(self, write_dataset, reg, fragment):
        path = write_dataset([self._row(reg=reg)])
        with pytest.raises(DatasetError, match="line 1") as err:
            load_detection_dataset(path)
        assert fragment in str(err.value)

    def test_missing_boxes_and_duplicates(self, write_dataset):
        with pytest.raises(DatasetError, match="boxes"):
            load_detection_dataset(write_dataset([json.dumps({"id": "a", "boxes": []})]))
        row = self._row("same")
        with pytest.raises(DatasetError, match="duplicate"):
            load_detection_dataset(write_dataset([row, row]))


class TestDescriptor:
    def test_replay_requires_path_and_remote_requires_url(self):
        with pytest.raises(InvalidInputError):
            BackendDescriptor(kind="replay")
        with pytest.raises(InvalidInputError):
            BackendDescriptor(kind="remote")
        with pytest.raises(InvalidInputError):
            BackendDescriptor(kind="magic", path="x")

    def test_field_validation(self):
        with pytest.raises(InvalidInputError):
            BackendDescriptor(kind="replay", path="x", role="oracle")
        with pytest.raises(InvalidInputError):
            BackendDescriptor(kind="remote", url="http://x", timeout_ms=0)
        with pytest.raises(InvalidInputError):
            BackendDescriptor(kind="replay", path="x", cost=-1.0)
        with pytest.raises(InvalidInputError):
            BackendDescriptor.from_obj({"kind": "replay", "path": "x", "shiny": True})

    def test_wire_round_trip(self):
        d = BackendDescriptor(kind="remote", url="http://x/infer", timeout_ms=250.0, cost=3.0)
        assert BackendDescriptor.from_obj(d.to_obj()) == d
        r = BackendDescriptor(kind="replay", path="data.jsonl", role="teacher", cost=9.0)
        assert BackendDescriptor.from_obj(r.to_obj()) == r


@pytest.fixture
def replay_paths(tmp_path):
    records = [
        # teacher_pred deliberately disagrees with argmax(teacher_logits) on r0
        CalibrationRecord(
            id="r0",
            label=0,
            student_logits=(4.0, 0.0),
            teacher_logits=(5.0, 1.0),
            teacher_pred=1,
        ),
        CalibrationRecord(id="r1", label=1, student_logits=(0.0, 2.0), teacher_logits=(0.0, 3.0)),
        CalibrationRecord(id="r2", label=0, student_logits=(1.0, 0.0)),
    ]
    path = tmp_path / "replay.jsonl"
    save_classification_dataset(records, path)
    return path


class TestReplayBackend:
    def test_student_role_plays_back_student_logits(self, replay_paths):
        backend = ReplayBackend(BackendDescriptor(kind="replay", path=str(replay_paths), cost=2.0))
        out = backend.infer(sample_id="r0")
        assert out.logits == (4.0, 0.0)
        assert out.prediction == 0
        assert out.cost == 2.0

    def test_teacher_role_prefers_stored_prediction(self, replay_paths):
        backend = ReplayBackend(
            BackendDescriptor(kind="replay", path=str(replay_paths), role="teacher")
        )
        assert backend.infer(sample_id="r0").prediction == 1
        assert backend.infer(sample_id="r1").prediction == 1  # argmax fallback

    def test_teacher_role_without_teacher_output_fails(self, replay_paths):
        backend = ReplayBackend(
            BackendDescriptor(kind="replay", path=str(replay_paths), role="teacher")
        )
        with pytest.raises(UnknownIdError):
            backend.infer(sample_id="r2")

    def test_unknown_and_missing_ids(self, replay_paths):
        backend = ReplayBackend(BackendDescriptor(kind="replay", path=str(replay_paths)))
        with pytest.raises(UnknownIdError):
            backend.infer(sample_id="nope")
        with pytest.raises(UnknownIdError):
            backend.infer()

    def test_replay_is_deterministic(self, replay_paths):
        backend = ReplayBackend(BackendDescriptor(kind="replay", path=str(replay_paths)))
        assert backend.infer(sample_id="r1") == backend.infer(sample_id="r1")

    def test_detection_replay(self, tmp_path):
        path = tmp_path / "det.jsonl"
        path.write_text(
            json.dumps({"id": "d0", "boxes": [{"class_logits": [0.0, 3.0]}]}) + "\n",
            encoding="utf-8",
        )
        backend = ReplayBackend(
            BackendDescriptor(kind="replay", path=str(path), task="detection")
        )
        out = backend.infer(sample_id="d0")
        assert out.task == "detection"
        assert out.prediction == [1]
        assert out.detection is not None


def _remote(handler, timeout_ms=1000.0, cost=5.0) -> RemoteBackend:
    descriptor = BackendDescriptor(kind="remote", url="http://model/infer", timeout_ms=timeout_ms, cost=cost)
    client = httpx.Client(transport=httpx.MockTransport(handler), timeout=timeout_ms / 1000.0)
    return RemoteBackend(descriptor, client=client)


class TestRemoteBackend:
    def test_classification_response(self):
        def handler(request):
            body = json.loads(request.content)
            assert body["id"] == "q1"
            return httpx.Response(200, json={"task": "classification", "logits": [1.0, 5.0], "prediction": 1})

        out = _remote(handler).infer(sample_id="q1")
        assert out.logits == (1.0, 5.0)
        assert out.prediction == 1
        assert out.cost == 5.0
        assert out.measured_latency_ms >= 0.0

    def test_prediction_defaults_to_argmax(self):
        def handler(request):
            return httpx.Response(200, json={"task": "classification", "logits": [9.0, 1.0]})

        assert _remote(handler).infer(sample_id="x").prediction == 0

    def test_detection_response(self):
        def handler(request):
            return httpx.Response(
                200,
                json={
                    "task": "detection",
                    "detection": {
                        "boxes": [
                            {
                                "class_logits": [0.0, 2.0],
                                "reg_samples": [[{"s": 0.5, "q": 1.0}]] * 4,
                            }
                        ]
                    },
                },
            )

        out = _remote(handler).infer(sample_id="x")
        assert out.task == "detection"
        assert out.prediction == [1]
        assert out.detection.boxes[0].reg_samples is not None

    @pytest.mark.parametrize(
        "payload",
        [
            {"task": "classification"},
            {"task": "classification", "logits": []},
            {"task": "classification", "logits": [1.0, "x"]},
            {"task": "detection"},
            {"task": "mystery", "logits": [1.0]},
            ["not", "an", "object"],
        ],
    )
    def test_malformed_payloads(self, payload):
        def handler(request):
            return httpx.Response(200, json=payload)

        with pytest.raises(MalformedResponseError):
            _remote(handler).infer(sample_id="x")

    def test_non_json_body(self):
        def handler(request):
            return httpx.Response(200, content=b"<html>oops</html>")

        with pytest.raises(MalformedResponseError):
            _remote(handler).infer(sample_id="x")

    def test_http_error_status(self):
        def handler(request):
            return httpx.Response(500, json={"detail": "boom"})

        with pytest.raises(BackendError):
            _remote(handler).infer(sample_id="x")

    def test_timeout_maps_to_its_own_error(self):
        def handler(request):
            raise httpx.ReadTimeout("too slow")

        with pytest.raises(BackendTimeoutError):
            _remote(handler).infer(sample_id="x")

    def test_open_backend_dispatch(self, replay_paths):
        replay = open_backend(BackendDescriptor(kind="replay", path=str(replay_paths)))
        assert isinstance(replay, ReplayBackend)
        remote = open_backend(BackendDescriptor(kind="remote", url="http://x"))
        assert isinstance(remote, RemoteBackend)
        out = backend_infer(BackendDescriptor(kind="replay", path=str(replay_paths)), sample_id="r0")
        assert out.prediction == 0


class TestPseudoLabels:
    def _unlabeled(self, tmp_path, n=6):
        records = [
            CalibrationRecord(id=f"u{i}", student_logits=(float(i), 1.0), student_cost=1.0, teacher_cost=3.0)
            for i in range(n)
        ]
        path = tmp_path / "unlabeled.jsonl"
        save_classification_dataset(records, path)
        return path

    def _teacher_file(self, tmp_path, ids):
        rng = np.random.default_rng(99)
        records = [
            CalibrationRecord(
                id=i, student_logits=(0.0, 0.0), teacher_logits=tuple(rng.normal(size=3))
            )
            for i in ids
        ]
        path = tmp_path / "teacher.jsonl"
        save_classification_dataset(records, path)
        return path

    def test_labels_are_teacher_argmax(self, tmp_path):
        in_path = self._unlabeled(tmp_path)
        teacher_path = self._teacher_file(tmp_path, [f"u{i}" for i in range(6)])
        out_path = tmp_path / "labeled.jsonl"
        teacher = BackendDescriptor(kind="replay", path=str(teacher_path), role="teacher")
        assert generate_pseudo_labels(in_path, teacher, out_path) == 6
        labeled = load_classification_dataset(out_path)
        assert len(labeled) == 6
        for before, after in zip(load_classification_dataset(in_path), labeled):
            assert after.label == int(np.argmax(np.asarray(after.teacher_logits)))
            assert after.teacher_pred == after.label
            assert after.student_logits == before.student_logits
            assert after.student_cost == before.student_cost

    def test_backend_failure_reports_partial_progress(self, tmp_path):
        in_path = self._unlabeled(tmp_path, n=6)
        teacher_path = self._teacher_file(tmp_path, ["u0", "u1", "u2"])  # u3 missing
        out_path = tmp_path / "labeled.jsonl"
        teacher = BackendDescriptor(kind="replay", path=str(teacher_path), role="teacher")
        with pytest.raises(PartialProgressError) as err:
            generate_pseudo_labels(in_path, teacher, out_path)
        assert err.value.completed == 3
        assert len(load_classification_dataset(out_path)) == 3

    def test_remote_teacher(self, tmp_path):
        in_path = self._unlabeled(tmp_path, n=3)
        out_path = tmp_path / "labeled.jsonl"

        def handler(request):
            return httpx.Response(200, json={"task": "classification", "logits": [0.0, 7.0]})

        assert generate_pseudo_labels(in_path, _remote(handler), out_path) == 3
        assert all(r.label == 1 for r in load_classification_dataset(out_path))


class TestThresholdWire:
    def test_round_trip(self):
        for t in (-math.inf, -2.5, 0.0, 3.75, math.inf):
            assert threshold_from_wire(threshold_to_wire(t)) == t

    def test_sentinels_become_strings(self):
        assert threshold_to_wire(math.inf) == "inf"
        assert threshold_to_wire(-math.inf) == "-inf"
        assert threshold_to_wire(1.5) == 1.5

    def test_rejects_garbage(self):
        with pytest.raises(InvalidInputError):
            threshold_from_wire("huge")
        with pytest.raises(InvalidInputError):
            threshold_from_wire(True)
        with pytest.raises(InvalidInputError):
            threshold_from_wire(None)


class TestPolicyWire:
    def test_round_trip_with_specialization(self):
        policy = RouterPolicy(
            score_type="energy", threshold=-math.inf, specialization=Specialization(cbar=4)
        )
        assert policy_from_wire(policy_to_wire(policy)) == policy

    def test_partial_update_merges_over_base(self):
        base = RouterPolicy(score_type="softmax", threshold=0.9)
        updated = policy_from_wire({"threshold": 0.5}, base=base)
        assert updated.score_type == "softmax"
        assert updated.threshold == 0.5

    def test_specialization_can_be_cleared(self):
        base = RouterPolicy(specialization=Specialization(cbar=3))
        assert policy_from_wire({"specialization": None}, base=base).specialization is None

    def test_unknown_fields_rejected(self):
        with pytest.raises(InvalidInputError):
            policy_from_wire({"thresh": 1.0})


class TestCurveArtifact:
    def _curve(self):
        points = (
            TradeoffPoint(threshold=-math.inf, accuracy=0.7, expected_cost=1.0, student_fraction=1.0),
            TradeoffPoint(threshold=0.25, accuracy=0.85, expected_cost=2.5, student_fraction=0.5),
            TradeoffPoint(threshold=math.inf, accuracy=0.95, expected_cost=5.0, student_fraction=0.0),
        )
        return TradeoffCurve(
            points=points,
            policy=RouterPolicy(score_type="random", random_rate=0.4),
            dataset_digest="abc123",
            seed=7,
        )

    def test_round_trip(self, tmp_path):
        curve = self._curve()
        path = tmp_path / "curve.jsonl"
        save_curve(curve, path)
        assert load_curve(path) == curve

    def test_file_is_header_plus_one_point_per_line(self, tmp_path):
        path = tmp_path / "curve.jsonl"
        save_curve(self._curve(), path)
        lines = path.read_text(encoding="utf-8").strip().split("\n")
        assert len(lines) == 4
        header = json.loads(lines[0])
        assert header["kind"] == "tradeoff_curve"
        assert header["seed"] == 7
        first_point = json.loads(lines[1])
        assert first_point["threshold"] == "-inf"

    def test_empty_artifact_rejected(self, tmp_path):
        path = tmp_path / "curve.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DatasetError):
            load_curve(path)


class TestHistogramArtifact:
    def test_file_layout(self, tmp_path):
        hist = export_histogram([0.0, 0.5, 1.0, 1.5, 2.0], bins=4)
        path = tmp_path / "hist.jsonl"
        save_histogram(hist, path)
        lines = path.read_text(encoding="utf-8").strip().split("\n")
        header = json.loads(lines[0])
        assert header == {"kind": "histogram", "bins": 4, "total": 5}
        bins = [json.loads(ln) for ln in lines[1:]]
        assert len(bins) == 4
        assert sum(b["count"] for b in bins) == 5
        assert bins[0]["lo"] == 0.0
        assert bins[-1]["hi"] == 2.0
