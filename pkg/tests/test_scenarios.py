from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundspeed.apparatus import C_LIGHT, INFINITE
from boundspeed.errors import ConfigError
from boundspeed.scenarios import (
    ClassicalityScenario,
    SignalingScenario,
    classicality_check,
    signaling_check,
)
from conftest import reference_config

lengths = st.floats(1e-3, 10.0)
speeds = st.floats(1e3, C_LIGHT)


def geometry(a1=0.3, a2=0.06, b1=0.3, b2=0.06, v0=1.5e8, v=INFINITE):
    return reference_config(a1=a1, a2=a2, b1=b1, b2=b2, v0=v0, v=v)


def test_scenario_validation():
    cfg = geometry()
    with pytest.raises(ConfigError):
        SignalingScenario(cfg, observer_wait=0.5 * cfg.flight_time)
    with pytest.raises(ConfigError):
        ClassicalityScenario(cfg, epsilon_gap=0.5 * cfg.flight_time)


def test_infinite_v_long_baseline_is_superluminal():
    cfg = geometry(b1=0.01, b2=0.01, v0=1.5e8)
    wait = 2 * cfg.flight_time
    cfg = geometry(b1=0.01, b2=0.01, v0=1.5e8, a2=10 * C_LIGHT * wait)
    verdict = signaling_check(SignalingScenario(cfg, wait))
    assert verdict.superluminal
    assert verdict.signal_speed == pytest.approx(10 * C_LIGHT)
    assert verdict.retardation == 0.0


def test_light_speed_response_never_superluminal():
    for a2 in (1e-3, 0.06, 10.0, 1e4):
        v = signaling_check(SignalingScenario(geometry(a2=a2, v=C_LIGHT), 1e-6))
        assert not v.superluminal
        assert v.signal_speed <= C_LIGHT * (1 + 1e-12)


@settings(max_examples=300)
@given(lengths, lengths, lengths)
def test_particle_speed_response_bounded(a2, b1, b2):
    cfg = geometry(a2=a2, b1=b1, b2=b2, v=1.5e8)
    v = signaling_check(SignalingScenario(cfg, 2 * cfg.flight_time))
    assert v.signal_speed <= 1.5e8 * (1 + 1e-12)
    assert not v.superluminal


@settings(max_examples=300)
@given(lengths, lengths, lengths, speeds, st.floats(1.01, 1e3))
def test_subluminal_response_never_superluminal(a2, b1, b2, v, wait_factor):
    cfg = geometry(a2=a2, b1=b1, b2=b2, v0=1e3, v=v)
    verdict = signaling_check(SignalingScenario(cfg, wait_factor * cfg.flight_time))
    assert not verdict.superluminal
    assert verdict.distinguish_time >= cfg.flight_time


@settings(max_examples=300)
@given(lengths, lengths, lengths, st.floats(1.01, 1e3))
def test_infinite_response_condition(a2, b1, b2, wait_factor):
    cfg = geometry(a2=a2, b1=b1, b2=b2)
    wait = wait_factor * cfg.flight_time
    verdict = signaling_check(SignalingScenario(cfg, wait))
    assert verdict.superluminal == (a2 > C_LIGHT * wait)


def test_classicality_infinite_v_interferes():
    verdict = classicality_check(ClassicalityScenario(geometry(), 1e-6))
    assert not verdict.interference_impossible
    assert verdict.response_time == 0.0


def test_classicality_direct_inequality():
    # (b1 + b2) / v0 = 1 s, (a1 + a2) / v = 2 s
    cfg = reference_config(a1=1.0, a2=1.0, b1=0.5, b2=0.5, v0=1.0, v=1.0)
    verdict = classicality_check(ClassicalityScenario(cfg, 5.0))
    assert verdict.flight_time == 1.0 and verdict.response_time == 2.0
    assert verdict.interference_impossible and not verdict.marginal


def test_classicality_tie_is_marginal():
    cfg = reference_config(a1=0.5, a2=0.5, b1=0.5, b2=0.5, v0=2.0, v=2.0)
    verdict = classicality_check(ClassicalityScenario(cfg, 1.0))
    assert verdict.marginal
    assert not verdict.interference_impossible


@settings(max_examples=300)
@given(lengths, lengths, lengths, lengths, st.floats(1.0, 1e9), st.floats(1.0, 1e9))
def test_classicality_matches_inequality(a1, a2, b1, b2, v0, v):
    cfg = reference_config(a1=a1, a2=a2, b1=b1, b2=b2, v0=v0, v=v)
    verdict = classicality_check(ClassicalityScenario(cfg, 2 * cfg.flight_time))
    assert verdict.interference_impossible == ((b1 + b2) / v0 < (a1 + a2) / v)


@settings(max_examples=200)
@given(lengths, lengths, lengths, lengths, st.floats(1.0, 1e9), st.floats(1.0, 10.0))
def test_classicality_monotone_in_a(a1, a2, b1, b2, v, grow):
    cfg = reference_config(a1=a1, a2=a2, b1=b1, b2=b2, v0=1e8, v=v)
    before = classicality_check(ClassicalityScenario(cfg, 1.0)).interference_impossible
    for bigger in (cfg.replace(a1=a1 * grow), cfg.replace(a2=a2 * grow)):
        after = classicality_check(ClassicalityScenario(bigger, 1.0)).interference_impossible
        assert after >= before


def test_verdicts_serialise():
    cfg = geometry(v=1.5e8)
    d = signaling_check(SignalingScenario(cfg, 1e-8)).as_dict()
    assert set(d) == {"flight_time", "retardation", "distinguish_time", "signal_speed", "c_light", "superluminal"}
    assert math.isfinite(d["signal_speed"])
    assert set(classicality_check(ClassicalityScenario(cfg, 1e-8)).as_dict()) == {
        "flight_time", "response_time", "interference_impossible", "marginal"
    }
