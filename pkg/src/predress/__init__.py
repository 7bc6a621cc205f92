"""Demonstration-driven bi-manual motion primitives and a calibrated
garment-response simulator for robot-assisted gown opening."""

from ._kernels import backend_name
from .bimanual import PairTrajectory, enforce_max_distance, pair_rollout
from .dmp import (
    Demonstration,
    DMPModel,
    KinematicLimits,
    PreprocessSpec,
    Trajectory,
    check_limits,
    fit,
    resample_and_filter,
    rollout,
)
from .episodes import (
    BatchReport,
    EpisodeTrace,
    ExperimentConfig,
    TrajectoryExecutor,
    load_config,
    render_report,
    run_batch,
    run_episode,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DemoFormatError,
    EstimatorError,
    FitError,
    LimitViolation,
    ModelFormatError,
    PredressError,
    PreprocessError,
    RegistryError,
    RolloutError,
)
from .garment import (
    GarmentCategory,
    GarmentObservation,
    ResponseModel,
    calibrate,
    make_estimator,
    sample_outcome,
)
from .primitives import (
    IterationPlan,
    PrimitiveSpec,
    Registry,
    build_quasi_static,
    compose,
    load_primitive,
    load_registry,
)
from .quat import orientation_displacement

__version__ = "0.1.0"

__all__ = [
    "BatchReport",
    "CalibrationError",
    "ConfigError",
    "Demonstration",
    "DemoFormatError",
    "DMPModel",
    "EpisodeTrace",
    "EstimatorError",
    "ExperimentConfig",
    "FitError",
    "GarmentCategory",
    "GarmentObservation",
    "IterationPlan",
    "KinematicLimits",
    "LimitViolation",
    "ModelFormatError",
    "PairTrajectory",
    "PredressError",
    "PreprocessError",
    "PreprocessSpec",
    "PrimitiveSpec",
    "Registry",
    "RegistryError",
    "ResponseModel",
    "RolloutError",
    "Trajectory",
    "TrajectoryExecutor",
    "backend_name",
    "build_quasi_static",
    "calibrate",
    "check_limits",
    "compose",
    "enforce_max_distance",
    "fit",
    "load_config",
    "load_primitive",
    "load_registry",
    "make_estimator",
    "orientation_displacement",
    "pair_rollout",
    "render_report",
    "resample_and_filter",
    "rollout",
    "run_batch",
    "run_episode",
    "sample_outcome",
    "__version__",
]
