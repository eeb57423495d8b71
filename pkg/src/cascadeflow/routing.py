"""Routing policies and the threshold comparator.

A policy names a score type and a threshold t.  Every deterministic score
is oriented so that higher means "fits the Student" (entropy is negated),
and one comparator serves all of them: the sample stays on the Student
iff score >= t.  Equality routes to the Student.

The random baseline ignores the score entirely and keeps a sample on the
Student iff a supplied uniform draw is below ``random_rate``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .energy import (
    entropy_score,
    free_energy_classification,
    free_energy_specialized,
    softmax_confidence,
)
from .errors import ConfigurationError, InvalidInputError

__all__ = [
    "SCORE_TYPES",
    "Specialization",
    "RouterPolicy",
    "RoutingDecision",
    "policy_score",
    "route",
    "route_specialized",
]

SCORE_TYPES = ("energy", "softmax", "entropy", "random")

STUDENT = "student"
TEACHER = "teacher"


@dataclass(frozen=True)
class Specialization:
    """Marks a policy as driving a specialized Student with ``cbar`` real classes plus one 'other' class."""

    cbar: int
    extra_index: int | None = None

    def __post_init__(self):
        if self.cbar < 1:
            raise ConfigurationError(f"cbar must be >= 1, got {self.cbar}")
        if self.extra_index is None:
            object.__setattr__(self, "extra_index", self.cbar)
        elif self.extra_index != self.cbar:
            raise ConfigurationError(
                f"extra_index must equal cbar (zero-based last position), got {self.extra_index} != {self.cbar}"
            )


@dataclass(frozen=True)
class RouterPolicy:
    """The runtime routing knob: score type, threshold, and optional specialization."""

    score_type: str = "energy"
    threshold: float = 0.0
    random_rate: float = 0.5
    specialization: Specialization | None = None

    def __post_init__(self):
        if self.score_type not in SCORE_TYPES:
            raise ConfigurationError(f"unknown score_type {self.score_type!r}, expected one of {SCORE_TYPES}")
        t = float(self.threshold)
        if np.isnan(t):
            raise ConfigurationError("threshold must not be NaN")
        object.__setattr__(self, "threshold", t)
        if not 0.0 <= self.random_rate <= 1.0:
            raise ConfigurationError(f"random_rate must be in [0, 1], got {self.random_rate}")
        if self.specialization is not None and self.score_type != "energy":
            raise ConfigurationError("specialization is only defined for the energy score")


@dataclass(frozen=True)
class RoutingDecision:
    target: str  # "student" | "teacher"
    score: float
    threshold_used: float


def policy_score(logits: Sequence[float], policy: RouterPolicy) -> float:
    """Map a logit vector to the policy's routing score (higher routes to Student).

    Undefined for the random policy, whose "score" is a per-request draw.
    """
    if policy.score_type == "energy":
        if policy.specialization is not None:
            return -free_energy_specialized(logits, policy.specialization.cbar)
        return -free_energy_classification(logits)
    if policy.score_type == "softmax":
        return softmax_confidence(logits)
    if policy.score_type == "entropy":
        return -entropy_score(logits)
    raise ConfigurationError("the random policy has no deterministic score; route() takes the draw")


def route(score: float, policy: RouterPolicy, rng_draw: float | None = None) -> RoutingDecision:
    """Compare a precomputed score against the policy threshold.

    Deterministic scores keep the sample on the Student iff score >= t.
    The random policy needs ``rng_draw`` ~ uniform(0,1) and keeps the sample
    iff draw < random_rate.
    """
    if policy.score_type == "random":
        if rng_draw is None:
            raise ConfigurationError("random policy requires an rng_draw")
        target = STUDENT if rng_draw < policy.random_rate else TEACHER
        return RoutingDecision(target=target, score=float(rng_draw), threshold_used=policy.random_rate)
    if np.isnan(score):
        raise InvalidInputError("score must not be NaN")
    target = STUDENT if score >= policy.threshold else TEACHER
    return RoutingDecision(target=target, score=float(score), threshold_used=policy.threshold)


def route_specialized(logits: Sequence[float], policy: RouterPolicy) -> RoutingDecision:
    """Route for a specialized Student: energy gate plus the extra-class check.

    Student iff -F_bar >= t AND the argmax over all cbar+1 logits lands in a
    real class; an argmax at the extra ("other") class escalates regardless
    of the energy.  Argmax ties break toward the lowest index.
    """
    spec = policy.specialization
    if spec is None:
        raise ConfigurationError("route_specialized requires a policy with specialization")
    score = -free_energy_specialized(logits, spec.cbar)
    predicted = int(np.argmax(np.asarray(logits, dtype=np.float64)))
    if predicted == spec.extra_index or score < policy.threshold:
        return RoutingDecision(target=TEACHER, score=score, threshold_used=policy.threshold)
    return RoutingDecision(target=STUDENT, score=score, threshold_used=policy.threshold)
