"""cascadeflow: adaptive Student/Teacher cascade routing on free-energy scores.

A small model answers every request; a per-sample confidence score decides
whether its answer ships or the request escalates to a large model.  The
package provides the scoring functions, the routing policies, an offline
calibration toolkit (threshold sweeps, policy comparison, McNemar test),
replay/remote model backends, a live HTTP gateway, and a CLI.
"""

from .calibration import (
    CalibrationRecord,
    Histogram,
    McNemarResult,
    SeparationDiagnostic,
    TradeoffCurve,
    TradeoffPoint,
    crossing_point_threshold,
    expected_cost,
    export_histogram,
    mcnemar,
    paired_outcomes,
    record_scores,
    sweep_thresholds,
    threshold_for_target,
)
from .backends import (
    BackendDescriptor,
    ModelOutput,
    RemoteBackend,
    ReplayBackend,
    backend_infer,
    dataset_digest,
    generate_pseudo_labels,
    load_classification_dataset,
    load_curve,
    load_detection_dataset,
    open_backend,
    save_classification_dataset,
    save_curve,
    save_histogram,
)
from .energy import (
    DetectionBox,
    DetectionSample,
    RegressionScoreSample,
    detection_class_energy,
    detection_regression_energy,
    detection_total_energy,
    entropy_score,
    free_energy_classification,
    free_energy_regression,
    free_energy_specialized,
    softmax_confidence,
)
from .errors import (
    BackendError,
    BackendTimeoutError,
    CalibrationError,
    CascadeflowError,
    ConfigurationError,
    DatasetError,
    InvalidInputError,
    MalformedResponseError,
    PartialProgressError,
    UnknownIdError,
)
from .routing import (
    SCORE_TYPES,
    RouterPolicy,
    RoutingDecision,
    Specialization,
    policy_score,
    route,
    route_specialized,
)
from .service import Gateway, GatewayConfig, config_from_wire, config_to_wire, create_app

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # energy
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
    # routing
    "SCORE_TYPES",
    "Specialization",
    "RouterPolicy",
    "RoutingDecision",
    "policy_score",
    "route",
    "route_specialized",
    # calibration
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
    # backends
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
    # service
    "GatewayConfig",
    "Gateway",
    "create_app",
    "config_to_wire",
    "config_from_wire",
    # errors
    "CascadeflowError",
    "InvalidInputError",
    "ConfigurationError",
    "CalibrationError",
    "DatasetError",
    "BackendError",
    "UnknownIdError",
    "BackendTimeoutError",
    "MalformedResponseError",
    "PartialProgressError",
]
