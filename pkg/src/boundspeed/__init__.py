"""Rotating-wheel double-pinhole simulator with a finite boundary-response speed."""

from __future__ import annotations

__version__ = "0.1.0"

from .apparatus import (
    C_LIGHT,
    INFINITE,
    ApparatusConfig,
    PureSector,
    ResponseSpeedWarning,
    ScreenPoint,
    a_eff,
    a_eff_windows,
    a_open,
    a_open_windows,
    exposure_windows,
    oe0_azimuth,
    predict_delta,
    predict_shift_x,
    pure_sector,
    screen_occluded,
)
from .analysis import (
    SpeedEstimate,
    VisibilityProfile,
    estimate_boundary,
    estimate_v,
    expected_pattern,
    speed_from_shift,
    visibility_profile,
)
from .config import parse_config
from .engine import DetectorGrid, EmissionProcess, GridSpec, merge, run
from .errors import (
    AmbiguousBoundaryError,
    BoundspeedError,
    ConfigError,
    ConfigurationMismatch,
    EstimationError,
    GridFormatError,
    NoBoundaryError,
    StaticConfigurationError,
)
from .intervals import PeriodicIntervalSet
from .patterns import FringePattern, PatternKind, build_sampler, pdf
from .scenarios import ClassicalityScenario, SignalingScenario, classicality_check, signaling_check
