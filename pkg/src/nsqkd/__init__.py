"""Device-independent key rates for the AMP no-signaling QKD protocol via linear programming."""

from nsqkd.protocol import (
    ALICE_ANGLES,
    BOB_ANGLES,
    SETTINGS,
    CorrelationTable,
    MeasurementSetting,
    ProtocolConfig,
    born_joint,
    validate_table,
    werner_correlations,
)
from nsqkd.lp_builder import (
    LpInstance,
    build_full,
    build_reduced,
    lift_solution,
    verify_redundancies,
)
from nsqkd.simplex import Certificate, LpSolution, certify, parametric_concavity_check, solve
from nsqkd.keyrate import (
    BobEveJoint,
    KeyRateReport,
    binary_entropy,
    evaluate_point,
    find_threshold,
    ibe_bound,
    mutual_info_ab,
    report_for,
    verify_guessing_bound,
)
from nsqkd.sweep import SweepResult, run_sweep
from nsqkd.estimator import KeyRateEstimator

__version__ = "0.1.0"

__all__ = [
    "ALICE_ANGLES",
    "BOB_ANGLES",
    "SETTINGS",
    "BobEveJoint",
    "Certificate",
    "CorrelationTable",
    "KeyRateEstimator",
    "KeyRateReport",
    "LpInstance",
    "LpSolution",
    "MeasurementSetting",
    "ProtocolConfig",
    "SweepResult",
    "binary_entropy",
    "born_joint",
    "build_full",
    "build_reduced",
    "certify",
    "evaluate_point",
    "find_threshold",
    "ibe_bound",
    "lift_solution",
    "mutual_info_ab",
    "parametric_concavity_check",
    "report_for",
    "run_sweep",
    "solve",
    "validate_table",
    "verify_guessing_bound",
    "verify_redundancies",
    "werner_correlations",
]
