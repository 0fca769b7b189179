"""Idealised thought experiments evaluated in closed form."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class SignalingScenario:
    """Observer at a dark fringe S waits ``observer_wait`` after A closes at t1 = 0."""

    cfg: object
    observer_wait: float
    s_point_u: float | None = None

    def __post_init__(self):
        if not self.observer_wait > self.cfg.flight_time:
            raise ConfigError(
                f"observer_wait {self.observer_wait:g} s must exceed the flight time "
                f"{self.cfg.flight_time:g} s",
                key="observer_wait",
            )


@dataclass(frozen=True)
class ClassicalityScenario:
    """Source pulsed one particle at a time, ``epsilon_gap`` apart."""

    cfg: object
    epsilon_gap: float

    def __post_init__(self):
        if not self.epsilon_gap >= self.cfg.flight_time:
            raise ConfigError(
                f"epsilon_gap {self.epsilon_gap:g} s is shorter than the flight time "
                f"{self.cfg.flight_time:g} s",
                key="epsilon_gap",
            )


@dataclass(frozen=True)
class SignalingVerdict:
    flight_time: float
    retardation: float
    distinguish_time: float
    signal_speed: float
    c_light: float
    superluminal: bool

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ClassicalityVerdict:
    flight_time: float
    response_time: float
    interference_impossible: bool
    marginal: bool

    def as_dict(self):
        return asdict(self)


def signaling_check(sc):
    """Can the observer at S learn about pinhole A faster than light?

    With an instantaneous response the observer decides at the end of the wait
    (times are measured from the closing of A), so the signal covers ``a2`` in
    ``observer_wait``. With a finite response the earliest evidence needs both
    a particle flight and the response delay ``a2 / v``.
    """
    cfg = sc.cfg
    flight = cfg.flight_time
    c = cfg.c_light
    if math.isinf(cfg.v_response):
        retardation = 0.0
        elapsed = sc.observer_wait
        speed = cfg.a2 / elapsed
        superluminal = cfg.a2 > c * elapsed
    else:
        retardation = cfg.a2 / cfg.v_response
        if retardation >= flight:
            # evidence limited by the response itself: the signal moves at v
            elapsed, speed = retardation, cfg.v_response
            superluminal = cfg.v_response > c
        else:
            elapsed = flight
            speed = cfg.a2 / flight
            superluminal = cfg.a2 > c * flight
    return SignalingVerdict(
        flight_time=flight,
        retardation=retardation,
        distinguish_time=elapsed,
        signal_speed=speed,
        c_light=c,
        superluminal=superluminal,
    )


def classicality_check(sc):
    """Is interference ruled out when each particle must sense A on its own?

    Impossible when a particle lands, after ``(b1 + b2) / v0``, before the
    influence it sends via pinhole A (path ``a1 + a2``) reaches the screen. An
    exact tie is reported as marginal and never as impossible.
    """
    cfg = sc.cfg
    flight = cfg.flight_time
    if math.isinf(cfg.v_response):
        response = 0.0
    else:
        response = (cfg.a1 + cfg.a2) / cfg.v_response
    marginal = flight == response
    return ClassicalityVerdict(
        flight_time=flight,
        response_time=response,
        interference_impossible=flight < response,
        marginal=marginal,
    )
