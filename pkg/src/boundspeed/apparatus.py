"""Geometry and timing of the two-wheel apparatus.

Conventions used throughout the package:

* lengths in metres, times in seconds, angles in radians, angular speeds in rad/s;
* azimuth ``phi`` is measured around the wheel axis and increases in the
  direction of rotation;
* at ``t = 0`` the leading edge of the front wheel reaches pinhole A, so A is
  covered on ``[0, alpha/omega)`` of every period;
* at ``t = 0`` the leading edge of the rear wheel sits at azimuth ``theta``
  (the line OE0), so the rear wheel covers ``[theta - beta, theta]``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConfigurationMismatch, StaticConfigurationError
from .intervals import PeriodicIntervalSet

TWO_PI = 2.0 * math.pi
C_LIGHT = 2.99792458e8
INFINITE = math.inf


class ResponseSpeedWarning(UserWarning):
    """The response speed lies outside the range v0 <= v usually assumed."""


@dataclass(frozen=True)
class ApparatusConfig:
    a1: float
    a2: float
    b1: float
    b2: float
    v0: float
    v_response: float
    R: float
    alpha: float
    beta: float
    theta: float
    omega: float
    wheel_axis_offset: float
    c_light: float = C_LIGHT

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2", "R", "v0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be finite and > 0, got {value}", key=name)
        if not 0.0 < self.alpha < self.beta < TWO_PI:
            raise ConfigError(
                f"need 0 < alpha < beta < 2*pi, got alpha={self.alpha}, beta={self.beta}",
                key="alpha",
            )
        if not 0.0 <= self.theta < TWO_PI:
            raise ConfigError(f"need 0 <= theta < 2*pi, got {self.theta}", key="theta")
        if not (self.omega >= 0 and math.isfinite(self.omega)):
            raise ConfigError(f"omega must be finite and >= 0, got {self.omega}", key="omega")
        if not self.wheel_axis_offset >= 0:
            raise ConfigError("wheel_axis_offset must be >= 0", key="wheel_axis_offset")
        if not self.v_response > 0:
            raise ConfigError(f"v_response must be > 0, got {self.v_response}", key="v_response")
        if not self.c_light > 0:
            raise ConfigError("c_light must be > 0", key="c_light")
        if self.v_response < self.v0:
            warnings.warn(
                f"v_response={self.v_response:g} m/s is below the particle speed v0={self.v0:g} m/s",
                ResponseSpeedWarning,
                stacklevel=3,
            )

    @property
    def gamma(self):
        """Angle of the sector OE0E3 (pure-interference sector width)."""
        return self.beta - self.alpha

    @property
    def period(self):
        if self.omega == 0:
            raise StaticConfigurationError("wheels are stationary (omega = 0); no rotation period")
        return TWO_PI / self.omega

    @property
    def retardation(self):
        """Delay a2/v before a change at pinhole A reaches the screen."""
        return 0.0 if math.isinf(self.v_response) else self.a2 / self.v_response

    @property
    def flight_time(self):
        return (self.b1 + self.b2) / self.v0

    @property
    def rear_phase(self):
        """Azimuth of the rear wheel's trailing edge at t = 0."""
        return self.theta - self.beta

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_omega(self, omega):
        return dataclasses.replace(self, omega=omega)

    def physical_params(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ScreenPoint:
    """A point on the screen in wheel-axis polar coordinates plus fringe coordinate.

    The fringe-normal axis points radially away from the axis at the pattern
    centre, so ``u = r - wheel_axis_offset``.
    """

    phi: float
    r: float
    u: float

    @classmethod
    def from_polar(cls, cfg, phi, r):
        if r < 0:
            raise ValueError("r must be >= 0")
        return cls(phi, r, r - cfg.wheel_axis_offset)

    @classmethod
    def from_fringe(cls, cfg, phi, u):
        return cls.from_polar(cfg, phi, cfg.wheel_axis_offset + u)


def oe0_azimuth(cfg):
    """Azimuth of the line OE0: rear-wheel leading edge when A starts closing."""
    return cfg.theta


def a_open_windows(cfg):
    """Times within one period during which pinhole A is uncovered."""
    period = cfg.period
    closed = cfg.alpha / cfg.omega
    return PeriodicIntervalSet(period, ((min(closed, period), period),))


def a_eff_windows(cfg):
    """Times at which the screen responds as if pinhole A were open."""
    return a_open_windows(cfg).shift(cfg.retardation)


def a_open(cfg, t):
    if cfg.omega == 0:
        return True
    return a_open_windows(cfg).contains(t)


def a_eff(cfg, t):
    """Retarded status of pinhole A as seen from the screen at time ``t``."""
    if cfg.omega == 0:
        return True
    return a_open_windows(cfg).contains(t - cfg.retardation)


def screen_occluded(cfg, p, t):
    if p.r > cfg.R:
        return False
    rel = (p.phi - cfg.rear_phase - cfg.omega * t) % TWO_PI
    return rel <= cfg.beta


def exposure_windows(cfg, phi):
    """Times within one period during which azimuth ``phi`` (r <= R) is uncovered."""
    s = (phi - cfg.rear_phase) % TWO_PI
    # covered while omega*t lies in [s - beta, s]
    return PeriodicIntervalSet.from_arc(cfg.period, s / cfg.omega, (TWO_PI - cfg.beta) / cfg.omega)


def predict_delta(cfg):
    """Angle swept by the rear wheel during the retardation, omega * a2 / v."""
    if math.isinf(cfg.v_response):
        return 0.0
    return cfg.omega * cfg.a2 / cfg.v_response


@dataclass(frozen=True)
class PureSector:
    start: float
    width: float
    displacement: float
    empty: bool = False

    @property
    def end(self):
        return self.start + self.width

    def contains(self, phi):
        """Membership of ``phi`` (any real) in the closed sector, modulo 2*pi."""
        if self.empty:
            return False
        return (phi - self.start) % TWO_PI <= self.width


def pure_sector(cfg):
    """Azimuth range that is only ever exposed while A is effectively open.

    Returned as ``start <= end`` with ``start`` reduced into ``[0, 2*pi)``. The
    sector is the static one ``[theta - gamma, theta]`` turned forward by the
    displacement ``omega * a2 / v``; its width stays ``beta - alpha``.
    """
    delta = predict_delta(cfg)
    start = (cfg.rear_phase + cfg.alpha + delta) % TWO_PI
    return PureSector(start=start, width=cfg.gamma, displacement=delta, empty=cfg.gamma <= 0)


def predict_shift_x(cfg_slow, cfg_fast):
    """Displacement R * (omega_f - omega_s) * a2 / v of the dividing boundary at the wheel tip."""
    check_same_geometry(cfg_slow, cfg_fast)
    if math.isinf(cfg_fast.v_response):
        return 0.0
    return cfg_fast.R * (cfg_fast.omega - cfg_slow.omega) * cfg_fast.a2 / cfg_fast.v_response


def check_same_geometry(cfg_a, cfg_b):
    """Raise unless the two configurations differ at most in ``omega``."""
    da = cfg_a.physical_params()
    db = cfg_b.physical_params()
    da.pop("omega")
    db.pop("omega")
    bad = sorted(k for k in da if da[k] != db[k])
    if bad:
        raise ConfigurationMismatch(f"configurations differ in {', '.join(bad)} (only omega may differ)")


def wrap_angle(x):
    """Reduce angles into [0, 2*pi); cheaper than ``np.mod`` on large arrays."""
    x = np.asarray(x, dtype=float)
    return x - TWO_PI * np.floor(x * (1.0 / TWO_PI))


def effective_status(cfg, phi, t):
    """Vectorised ``(a_eff_open, occluded)`` for arrays of azimuths and arrival times.

    Both flags derive from the same reduced wheel phase so that points inside
    the pure sector can never be classified exposed-while-closed by rounding.
    Radius is not considered here; callers handle ``r > R`` themselves.
    """
    phi = np.asarray(phi, dtype=float)
    t = np.asarray(t, dtype=float)
    s = wrap_angle(phi - cfg.rear_phase)
    if cfg.omega == 0:
        return np.ones(np.broadcast(phi, t).shape, dtype=bool), s <= cfg.beta
    phase = wrap_angle(cfg.omega * t)
    delta = wrap_angle(predict_delta(cfg))
    closed = _wrap_once(phase - delta) < cfg.alpha if delta else phase < cfg.alpha
    occluded = _wrap_once(s - phase) <= cfg.beta
    return ~closed, occluded


def _wrap_once(d):
    # d in (-2*pi, 2*pi) here, so one conditional shift suffices
    return np.where(d < 0.0, d + TWO_PI, d)
