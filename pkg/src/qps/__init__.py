"""Simulation and analysis toolkit for biphoton interferometric positioning.

The package models round-trip photon delays over three reflector
baselines, simulates the two-photon coincidence dip used to measure those
delays, inverts the resulting range-difference equations for user
position, and propagates delay error into position error.
"""

from .errors import (
    DegenerateDelayError,
    DegenerateGeometryError,
    FitDivergedError,
    InvalidInputError,
    NoDipFoundError,
    NotConvergedError,
    QpsError,
    SingularJacobianError,
)
from .geometry import (
    SPEED_OF_LIGHT,
    ZERO_DELAY,
    Baseline,
    Constellation,
    OpticalDelay,
    Point3,
    balanced_delay,
    forward_delays,
    load_constellation,
    round_trip_times,
)
from .photonics import (
    BalanceEstimate,
    DipScan,
    HomConfig,
    coincidence_rate,
    estimate_balance,
    simulate_dip_scan,
)
from .solver import (
    DelayTriple,
    Region,
    SolveResult,
    multi_start_solve,
    residuals,
    solve_position,
)
from .gdop import (
    SEP_COEFFICIENT,
    ErrorEstimate,
    SensitivityMatrix,
    forward_jacobian,
    point_error,
    propagate_errors,
    sensitivity,
    sep_radius,
)
from .scenarios import (
    EARTH_RADIUS_M,
    AxisSpec,
    FieldGrid,
    LeoConfig,
    TerrestrialConfig,
    build_leo,
    build_terrestrial,
    figure_dataset,
    scan_baseline_length,
    scan_line,
    scan_plane,
)

__version__ = "0.1.0"

__all__ = [
    "QpsError",
    "InvalidInputError",
    "DegenerateDelayError",
    "SingularJacobianError",
    "NotConvergedError",
    "DegenerateGeometryError",
    "NoDipFoundError",
    "FitDivergedError",
    "SPEED_OF_LIGHT",
    "ZERO_DELAY",
    "Point3",
    "Baseline",
    "Constellation",
    "OpticalDelay",
    "round_trip_times",
    "balanced_delay",
    "forward_delays",
    "load_constellation",
    "HomConfig",
    "DipScan",
    "BalanceEstimate",
    "coincidence_rate",
    "simulate_dip_scan",
    "estimate_balance",
    "DelayTriple",
    "SolveResult",
    "Region",
    "residuals",
    "solve_position",
    "multi_start_solve",
    "SEP_COEFFICIENT",
    "SensitivityMatrix",
    "ErrorEstimate",
    "forward_jacobian",
    "sensitivity",
    "propagate_errors",
    "sep_radius",
    "point_error",
    "EARTH_RADIUS_M",
    "TerrestrialConfig",
    "LeoConfig",
    "AxisSpec",
    "FieldGrid",
    "build_terrestrial",
    "build_leo",
    "scan_plane",
    "scan_line",
    "scan_baseline_length",
    "figure_dataset",
]
