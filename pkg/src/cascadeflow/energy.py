"""Pure scoring functions for the Student/Teacher cascade router.

Every score here is a function of one model output (a logit vector, or a
set of detection boxes) and nothing else.  Free energy is the negative
log-sum-exp of the logits; its negation is the routing score, where higher
means "the Student fits this sample".  Softmax confidence and entropy are
the alternative scores used by the baseline routers.

All exp-sums are computed with a max shift, so logits anywhere in the
float64 range are safe; the naive sum overflows past ~709.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "RegressionScoreSample",
    "DetectionBox",
    "DetectionSample",
    "free_energy_classification",
    "free_energy_specialized",
    "softmax_confidence",
    "entropy_score",
    "free_energy_regression",
    "detection_class_energy",
    "detection_regression_energy",
    "detection_total_energy",
]


class RegressionScoreSample(NamedTuple):
    """One importance-sampling draw: a regression score at y_k and the proposal density q(y_k)."""

    score: float
    proposal_density: float


@dataclass(frozen=True)
class DetectionBox:
    """One detected box: class logits plus, optionally, per-coordinate regression score samples.

    ``reg_samples`` holds 4 sample lists (one per box coordinate).  ``None``
    selects the documented classification-only fallback, where the sample
    contributes no regression energy.
    """

    class_logits: Sequence[float]
    reg_samples: Sequence[Sequence[RegressionScoreSample]] | None = None


@dataclass(frozen=True)
class DetectionSample:
    """All boxes detected on one input image."""

    boxes: Sequence[DetectionBox] = field(default_factory=tuple)


def _as_logits(values: Sequence[float], name: str = "logits") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInputError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def _logsumexp(arr: np.ndarray) -> float:
    m = float(arr.max())
    return m + float(np.log(np.sum(np.exp(arr - m))))


def free_energy_classification(logits: Sequence[float]) -> float:
    """Free energy of a classifier output: F = -log sum_i exp(logits_i)."""
    return -_logsumexp(_as_logits(logits))


def free_energy_specialized(logits: Sequence[float], cbar: int) -> float:
    """Free energy of a specialized Student, summed over the top-cbar classes only.

    ``logits`` must have length cbar+1; the extra ("other") class sits at the
    last index and is excluded from the sum, so its value never affects the
    result.
    """
    arr = _as_logits(logits)
    if cbar < 1:
        raise InvalidInputError(f"cbar must be >= 1, got {cbar}")
    if arr.size != cbar + 1:
        raise InvalidInputError(
            f"specialized logits must have length cbar+1 = {cbar + 1}, got {arr.size}"
        )
    return -_logsumexp(arr[:cbar])


def softmax_confidence(logits: Sequence[float]) -> float:
    """Maximum softmax probability, in (0, 1].

    Satisfies log(softmax_confidence(s)) = max(s) + free_energy_classification(s).
    """
    arr = _as_logits(logits)
    shifted = np.exp(arr - arr.max())
    return float(shifted.max() / shifted.sum())


def entropy_score(logits: Sequence[float]) -> float:
    """Shannon entropy of softmax(logits), in [0, log C].

    Probabilities that underflow to 0 contribute 0.  Routers negate this so
    that "higher score routes to the Student" holds for every score type.
    """
    arr = _as_logits(logits)
    shifted = np.exp(arr - arr.max())
    p = shifted / shifted.sum()
    nonzero = p > 0.0
    h = -float(np.sum(p[nonzero] * np.log(p[nonzero])))
    return max(h, 0.0)


def free_energy_regression(samples: Sequence[RegressionScoreSample]) -> float:
    """Importance-sampling estimate of a regressor's free energy.

    F ~= -log( (1/M) sum_k exp(score_k) / q_k ), computed in log space as
    the negated log-mean-exp of (score_k - log q_k).  The log-mean-exp form
    keeps the M-identical-samples case exact.
    """
    if len(samples) == 0:
        raise InvalidInputError("free_energy_regression needs at least one sample")
    scores = np.fromiter((s[0] for s in samples), dtype=np.float64, count=len(samples))
    dens = np.fromiter((s[1] for s in samples), dtype=np.float64, count=len(samples))
    if not (np.all(np.isfinite(scores)) and np.all(np.isfinite(dens))):
        raise InvalidInputError("regression samples contain non-finite values")
    if np.any(dens <= 0.0):
        raise InvalidInputError("proposal densities must be strictly positive")
    logw = scores - np.log(dens)
    m = float(logw.max())
    return -(m + float(np.log(np.mean(np.exp(logw - m)))))


def _check_sample(sample: DetectionSample) -> Sequence[DetectionBox]:
    boxes = sample.boxes
    if len(boxes) < 1:
        raise InvalidInputError("DetectionSample needs at least one box")
    width = len(boxes[0].class_logits)
    for b, box in enumerate(boxes):
        if len(box.class_logits) != width:
            raise InvalidInputError(f"box {b}: class_logits length {len(box.class_logits)} != {width}")
        if box.reg_samples is not None:
            if len(box.reg_samples) != 4:
                raise InvalidInputError(f"box {b}: expected 4 coordinate sample lists, got {len(box.reg_samples)}")
            if any(len(coord) == 0 for coord in box.reg_samples):
                raise InvalidInputError(f"box {b}: empty coordinate sample list")
    return boxes


def detection_class_energy(sample: DetectionSample) -> float:
    """Mean classifier free energy over all boxes.

    The mean is a correctly-rounded sum (math.fsum), so replicating every
    box a power-of-two number of times cannot change the result.
    """
    boxes = _check_sample(sample)
    return math.fsum(free_energy_classification(b.class_logits) for b in boxes) / len(boxes)


def detection_regression_energy(sample: DetectionSample) -> float:
    """Mean regressor free energy over all 4*B box coordinates."""
    boxes = _check_sample(sample)
    if any(b.reg_samples is None for b in boxes):
        raise InvalidInputError("detection sample has no regression samples")
    energies = [free_energy_regression(coord) for b in boxes for coord in b.reg_samples]
    return math.fsum(energies) / len(energies)


def detection_total_energy(sample: DetectionSample) -> float:
    """Total detection free energy: classifier term plus regressor term.

    When no box carries regression samples, falls back to the classifier
    term alone (classification-only detection mode).
    """
    boxes = _check_sample(sample)
    total = detection_class_energy(sample)
    if all(b.reg_samples is None for b in boxes):
        return total
    return total + detection_regression_energy(sample)
