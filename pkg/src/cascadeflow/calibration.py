"""Offline calibration over labeled logit datasets.

Given records of Student logits, Teacher predictions, labels, and per-model
costs, this module sweeps routing thresholds into accuracy/cost trade-off
curves, picks thresholds for accuracy or cost targets, estimates the
crossing point of the fit/unfit score distributions, and runs the paired
McNemar significance test between two policies.

Everything is pure over immutable record lists; the random policy is made
deterministic by keying its per-record draws on an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CalibrationError, InvalidInputError
from .routing import RouterPolicy, policy_score

__all__ = [
    "CalibrationRecord",
    "TradeoffPoint",
    "TradeoffCurve",
    "McNemarResult",
    "SeparationDiagnostic",
    "Histogram",
    "record_scores",
    "sweep_thresholds",
    "expected_cost",
    "threshold_for_target",
    "crossing_point_threshold",
    "mcnemar",
    "paired_outcomes",
    "export_histogram",
]


@dataclass(frozen=True)
class CalibrationRecord:
    """One sample of offline calibration data.

    ``label`` and the teacher fields are optional so the same type carries
    unlabeled sets (pseudo-labeling input) and fully labeled ones; sweeps
    and McNemar require label plus a Teacher prediction.
    """

    id: str
    student_logits: Sequence[float]
    label: int | None = None
    teacher_pred: int | None = None
    teacher_logits: Sequence[float] | None = None
    student_cost: float = 0.0
    teacher_cost: float = 0.0
    cost_unit: str | None = None

    def __post_init__(self):
        if self.student_cost < 0 or self.teacher_cost < 0:
            raise InvalidInputError(f"record {self.id}: costs must be non-negative")

    def teacher_prediction(self) -> int:
        """Stored Teacher prediction, else argmax of teacher_logits."""
        if self.teacher_pred is not None:
            return self.teacher_pred
        if self.teacher_logits is not None:
            return int(np.argmax(np.asarray(self.teacher_logits, dtype=np.float64)))
        raise CalibrationError(f"record {self.id}: no teacher prediction available")


@dataclass(frozen=True)
class TradeoffPoint:
    threshold: float
    accuracy: float
    expected_cost: float
    student_fraction: float


@dataclass(frozen=True)
class TradeoffCurve:
    points: Sequence[TradeoffPoint]
    policy: RouterPolicy
    dataset_digest: str = ""
    seed: int | None = None


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    p_value: float
    odds_ratio: float


@dataclass(frozen=True)
class SeparationDiagnostic:
    """How far apart the fit/unfit score distributions sit, and where they cross."""

    mean_gap: float
    auroc: float
    crossing_threshold: float
    crossing_found: bool = True


@dataclass(frozen=True)
class Histogram:
    bin_edges: Sequence[float]
    counts: Sequence[int]
    total: int = field(default=0)


def _require_evaluable(records: Sequence[CalibrationRecord]) -> None:
    if len(records) == 0:
        raise CalibrationError("dataset is empty")
    for r in records:
        if r.label is None:
            raise CalibrationError(f"record {r.id}: missing label")
        if r.teacher_pred is None and r.teacher_logits is None:
            raise CalibrationError(f"record {r.id}: missing teacher prediction")


def record_scores(
    records: Sequence[CalibrationRecord], policy: RouterPolicy, seed: int = 0
) -> np.ndarray:
    """Per-record routing scores under ``policy`` (threshold ignored).

    For the random policy the score is a uniform(0,1) draw keyed on ``seed``
    and the record's position, compared with the usual ``score >= t`` rule;
    routing a fraction f of records then corresponds to t at the f-quantile,
    which is distributionally identical to Bernoulli routing at rate 1-t.
    """
    if policy.score_type == "random":
        rng = np.random.default_rng(seed)
        return rng.uniform(0.0, 1.0, size=len(records))
    return np.array([policy_score(r.student_logits, policy) for r in records], dtype=np.float64)


def _argmax_accepted(records: Sequence[CalibrationRecord], policy: RouterPolicy) -> np.ndarray:
    """Threshold-independent acceptance mask: False where the specialized argmax hits the extra class."""
    if policy.specialization is None:
        return np.ones(len(records), dtype=bool)
    extra = policy.specialization.extra_index
    return np.array(
        [int(np.argmax(np.asarray(r.student_logits, dtype=np.float64))) != extra for r in records]
    )


def expected_cost(n_student: int, n_teacher: int, f_student: float, f_teacher: float) -> float:
    """Usage-weighted average cost of the cascade.

    Teacher-routed samples pay f_student + f_teacher because the Student
    always runs first.  Computed as f_S + (N_T/(N_S+N_T)) * f_T, which is
    algebraically the weighted-average formula and keeps the result exactly
    invariant under scaling both counts.
    """
    if n_student < 0 or n_teacher < 0:
        raise InvalidInputError("counts must be non-negative")
    if f_student < 0 or f_teacher < 0:
        raise InvalidInputError("costs must be non-negative")
    total = n_student + n_teacher
    if total < 1:
        raise InvalidInputError("at least one routed sample is required")
    return f_student + (n_teacher / total) * f_teacher


def _joint_correct(
    records: Sequence[CalibrationRecord],
    student_mask: np.ndarray,
) -> np.ndarray:
    """Correctness of the joint cascade given who keeps each record."""
    out = np.empty(len(records), dtype=bool)
    for i, r in enumerate(records):
        if student_mask[i]:
            out[i] = int(np.argmax(np.asarray(r.student_logits, dtype=np.float64))) == r.label
        else:
            out[i] = r.teacher_prediction() == r.label
    return out


def sweep_thresholds(
    records: Sequence[CalibrationRecord],
    policy: RouterPolicy,
    grid: Sequence[float] | str = "auto",
    seed: int = 0,
    dataset_digest: str = "",
) -> TradeoffCurve:
    """Evaluate the joint cascade at every threshold in ``grid``.

    ``policy.threshold`` is ignored; each grid value takes its place.  The
    "auto" grid is every distinct observed score plus -inf/+inf sentinels,
    which visits every routing partition a threshold can produce.
    """
    _require_evaluable(records)
    n = len(records)
    scores = record_scores(records, policy, seed=seed)
    accepted = _argmax_accepted(records, policy)

    if isinstance(grid, str):
        if grid != "auto":
            raise InvalidInputError(f"unknown grid spec {grid!r}")
        thresholds = np.concatenate(([-np.inf], np.unique(scores), [np.inf]))
    else:
        thresholds = np.asarray(sorted(set(float(t) for t in grid)), dtype=np.float64)
        if thresholds.size == 0:
            raise InvalidInputError("threshold grid is empty")
        if np.any(np.isnan(thresholds)):
            raise InvalidInputError("threshold grid contains NaN")

    # Sort records by score descending: the Student set at threshold t is a
    # prefix of this order, intersected with the acceptance mask.
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    acc_sorted = accepted[order]

    student_correct = np.array(
        [int(np.argmax(np.asarray(r.student_logits, dtype=np.float64))) == r.label for r in records]
    )[order]
    teacher_correct = np.array([r.teacher_prediction() == r.label for r in records])[order]
    student_cost = np.array([r.student_cost for r in records], dtype=np.float64)[order]
    teacher_cost = np.array([r.teacher_cost for r in records], dtype=np.float64)[order]

    # Records rejected by the specialized argmax check always pay the Teacher.
    eff_correct_student = np.where(acc_sorted, student_correct, teacher_correct)
    eff_cost_student = np.where(acc_sorted, 0.0, teacher_cost)

    total_student_cost = float(np.sum(student_cost))
    prefix_correct = np.concatenate(([0.0], np.cumsum(eff_correct_student)))
    prefix_extra_cost = np.concatenate(([0.0], np.cumsum(eff_cost_student)))
    prefix_students = np.concatenate(([0], np.cumsum(acc_sorted.astype(np.int64))))
    suffix_correct = np.concatenate(([0.0], np.cumsum(teacher_correct[::-1])))[::-1]
    suffix_cost = np.concatenate(([0.0], np.cumsum(teacher_cost[::-1])))[::-1]

    points = []
    for t in thresholds:
        # k = number of records with score >= t (prefix length in sorted order)
        k = int(np.searchsorted(-sorted_scores, -t, side="right"))
        n_student = int(prefix_students[k])
        correct = prefix_correct[k] + suffix_correct[k]
        cost = total_student_cost + prefix_extra_cost[k] + suffix_cost[k]
        points.append(
            TradeoffPoint(
                threshold=float(t),
                accuracy=float(correct) / n,
                expected_cost=float(cost) / n,
                student_fraction=n_student / n,
            )
        )
    return TradeoffCurve(
        points=tuple(points),
        policy=policy,
        dataset_digest=dataset_digest,
        seed=seed if policy.score_type == "random" else None,
    )


def threshold_for_target(
    curve: TradeoffCurve,
    min_accuracy: float | None = None,
    max_cost: float | None = None,
) -> TradeoffPoint | None:
    """Pick the operating point meeting an accuracy floor or a cost ceiling.

    ``min_accuracy``: smallest threshold whose accuracy reaches the floor
    (the cheapest compliant point).  ``max_cost``: largest threshold whose
    cost stays under the ceiling (the most accurate compliant point).
    Returns None when no point complies.
    """
    if len(curve.points) == 0:
        raise InvalidInputError("curve has no points")
    if (min_accuracy is None) == (max_cost is None):
        raise InvalidInputError("specify exactly one of min_accuracy / max_cost")
    pts = sorted(curve.points, key=lambda p: p.threshold)
    if min_accuracy is not None:
        for p in pts:
            if p.accuracy >= min_accuracy:
                return p
        return None
    for p in reversed(pts):
        if p.expected_cost <= max_cost:
            return p
    return None


def _auroc(scores_fit: np.ndarray, scores_unfit: np.ndarray) -> float:
    """Rank-based AUROC with average ranks for ties (fit = positive class)."""
    pooled = np.concatenate([scores_fit, scores_unfit])
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=np.float64)
    ranks[order] = np.arange(1, pooled.size + 1, dtype=np.float64)
    sorted_vals = pooled[order]
    # average ranks within tie groups
    i = 0
    while i < sorted_vals.size:
        j = i
        while j + 1 < sorted_vals.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    n_fit, n_unfit = scores_fit.size, scores_unfit.size
    u = float(np.sum(ranks[:n_fit])) - n_fit * (n_fit + 1) / 2.0
    return u / (n_fit * n_unfit)


def crossing_point_threshold(
    scores_fit: Sequence[float],
    scores_unfit: Sequence[float],
    bins: int = 50,
) -> SeparationDiagnostic:
    """Locate where the fit-score distribution overtakes the unfit one.

    Both lists are histogrammed with shared equal-width bins over their
    union range and normalized to unit mass.  Scanning upward from the
    unfit mode, the crossing sits midway between the last bin where the
    unfit density still dominates and the first bin where the fit density
    exceeds it (so a support gap yields its midpoint).  When the fit
    density never takes over, the diagnostic falls back to the midpoint of
    the two means (the shared median for indistinguishable lists) and
    reports crossing_found=False.
    """
    fit = np.asarray(scores_fit, dtype=np.float64)
    unfit = np.asarray(scores_unfit, dtype=np.float64)
    if fit.size == 0 or unfit.size == 0:
        raise InvalidInputError("both score lists must be non-empty")
    if not (np.all(np.isfinite(fit)) and np.all(np.isfinite(unfit))):
        raise InvalidInputError("scores contain non-finite values")
    if bins < 2:
        raise InvalidInputError("bins must be >= 2")

    mean_gap = float(fit.mean() - unfit.mean())
    auroc = _auroc(fit, unfit)

    lo = float(min(fit.min(), unfit.min()))
    hi = float(max(fit.max(), unfit.max()))
    if np.sort(fit).tolist() == np.sort(unfit).tolist():
        return SeparationDiagnostic(
            mean_gap=mean_gap,
            auroc=auroc,
            crossing_threshold=float(np.median(fit)),
            crossing_found=False,
        )
    if lo == hi:
        return SeparationDiagnostic(mean_gap=mean_gap, auroc=auroc, crossing_threshold=lo, crossing_found=False)

    edges = np.linspace(lo, hi, bins + 1)
    fit_density = np.histogram(fit, bins=edges)[0] / fit.size
    unfit_density = np.histogram(unfit, bins=edges)[0] / unfit.size
    centers = 0.5 * (edges[:-1] + edges[1:])

    mode = int(np.argmax(unfit_density))
    cross = None
    for i in range(mode, bins):
        if fit_density[i] > unfit_density[i]:
            cross = i
            break
    if cross is None:
        midpoint = 0.5 * (float(fit.mean()) + float(unfit.mean()))
        return SeparationDiagnostic(mean_gap=mean_gap, auroc=auroc, crossing_threshold=midpoint, crossing_found=False)

    last_unfit = None
    for j in range(cross - 1, mode - 1, -1):
        if unfit_density[j] > fit_density[j]:
            last_unfit = j
            break
    if last_unfit is None:
        threshold = float(centers[cross])
    else:
        threshold = float(0.5 * (centers[last_unfit] + centers[cross]))
    return SeparationDiagnostic(mean_gap=mean_gap, auroc=auroc, crossing_threshold=threshold, crossing_found=True)


def mcnemar(b: int, c: int) -> McNemarResult:
    """Exact two-sided McNemar test on the discordant-pair counts.

    p = min(1, 2 * P(X >= max(b, c))) with X ~ Binomial(b+c, 1/2), computed
    with integer binomial coefficients.  b = c = 0 gives p = 1.  Odds ratio
    is b/c, with +inf for c = 0 < b and 1 for b = c = 0.
    """
    if b < 0 or c < 0:
        raise InvalidInputError("counts must be non-negative")
    n = b + c
    if n == 0:
        return McNemarResult(b=b, c=c, p_value=1.0, odds_ratio=1.0)
    k = max(b, c)
    tail = sum(math.comb(n, i) for i in range(k, n + 1))
    p = min(1.0, 2.0 * (tail / 2**n))
    if c == 0:
        odds = math.inf
    else:
        odds = b / c
    return McNemarResult(b=b, c=c, p_value=p, odds_ratio=odds)


def paired_outcomes(
    records: Sequence[CalibrationRecord],
    policy_a: RouterPolicy,
    policy_b: RouterPolicy,
    seed: int = 0,
) -> tuple[int, int]:
    """Discordant counts between two joint policies: (A right & B wrong, A wrong & B right)."""
    _require_evaluable(records)

    def student_mask(policy: RouterPolicy) -> np.ndarray:
        scores = record_scores(records, policy, seed=seed)
        accepted = _argmax_accepted(records, policy)
        if policy.score_type == "random":
            return (scores < policy.random_rate) & accepted
        return (scores >= policy.threshold) & accepted

    correct_a = _joint_correct(records, student_mask(policy_a))
    correct_b = _joint_correct(records, student_mask(policy_b))
    b = int(np.sum(correct_a & ~correct_b))
    c = int(np.sum(~correct_a & correct_b))
    return b, c


def export_histogram(scores: Sequence[float], bins: int) -> Histogram:
    """Equal-width histogram over [min, max]; counts sum to the input length."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise InvalidInputError("scores must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("scores contain non-finite values")
    if bins < 1:
        raise InvalidInputError("bins must be >= 1")
    counts, edges = np.histogram(arr, bins=bins)
    return Histogram(bin_edges=tuple(float(e) for e in edges), counts=tuple(int(c) for c in counts), total=int(arr.size))
