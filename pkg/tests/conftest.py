from __future__ import annotations

import math
import warnings

import pytest

from boundspeed.apparatus import ApparatusConfig, ResponseSpeedWarning
from boundspeed.engine import EmissionProcess, GridSpec
from boundspeed.patterns import FringePattern

DESK_V = 6.0
OMEGA_SLOW, OMEGA_FAST = 1.0, 10.0
DESK_BAND = (math.pi - 0.3, math.pi + 0.5)
DESK_RATE = 2.2e5
DESK_DURATION = 630.0


def desk_config(v=DESK_V, omega=OMEGA_SLOW, **changes):
    """Scaled apparatus: delta_fast = 10 * 0.06 / 6 = 0.1 rad."""
    params = dict(
        a1=0.3,
        a2=0.06,
        b1=0.3,
        b2=0.06,
        v0=1.5e8,
        v_response=v,
        R=0.1,
        alpha=0.1,
        beta=2 * math.pi - 0.5,
        theta=math.pi,
        omega=omega,
        wheel_axis_offset=0.1 - 2e-5,
    )
    params.update(changes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResponseSpeedWarning)
        return ApparatusConfig(**params)


def reference_config(v=1.5e8, omega=10 * 2 * math.pi, **changes):
    params = dict(
        a1=0.3,
        a2=0.06,
        b1=0.3,
        b2=0.06,
        v0=1.5e8,
        v_response=v,
        R=0.1,
        alpha=math.pi / 2,
        beta=3 * math.pi / 2,
        theta=math.pi,
        omega=omega,
        wheel_axis_offset=0.1 - 2e-5,
    )
    params.update(changes)
    return ApparatusConfig(**params)


@pytest.fixture
def desk():
    return desk_config


@pytest.fixture
def fringe():
    return FringePattern(lambda_fringe=1e-7)


def desk_grid(pat, n_phi=80, n_u=480, band=DESK_BAND):
    return GridSpec.around_pattern(pat, n_phi, n_u, band)


def desk_process(cfg, rate=DESK_RATE, dead_time=0.0):
    return EmissionProcess.for_apparatus(cfg, rate, dead_time)
