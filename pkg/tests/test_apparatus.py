from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from boundspeed.apparatus import (
    C_LIGHT,
    INFINITE,
    TWO_PI,
    ApparatusConfig,
    ResponseSpeedWarning,
    ScreenPoint,
    a_eff,
    a_eff_windows,
    a_open,
    a_open_windows,
    effective_status,
    exposure_windows,
    oe0_azimuth,
    predict_delta,
    predict_shift_x,
    pure_sector,
    screen_occluded,
)
from boundspeed.errors import ConfigError, ConfigurationMismatch, StaticConfigurationError
from conftest import desk_config, reference_config

RPS = TWO_PI


def base(**changes):
    return desk_config(**changes)


# ---- configuration invariants ------------------------------------------------------------


@pytest.mark.parametrize(
    "changes",
    [
        {"a2": 0.0},
        {"R": -1.0},
        {"alpha": 0.0},
        {"alpha": 2.0, "beta": 1.0},
        {"beta": TWO_PI},
        {"theta": TWO_PI},
        {"omega": -1.0},
        {"v_response": 0.0},
    ],
)
def test_invalid_configurations_rejected(changes):
    with pytest.raises(ConfigError):
        base(**changes)


def test_slow_response_only_warns():
    with pytest.warns(ResponseSpeedWarning):
        ApparatusConfig(
            a1=1, a2=1, b1=1, b2=1, v0=10.0, v_response=1.0, R=1, alpha=0.1, beta=1.0,
            theta=0.0, omega=1.0, wheel_axis_offset=0.5,
        )
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reference_config(v=INFINITE)


def test_gamma_and_flight_time():
    cfg = reference_config()
    assert cfg.gamma == pytest.approx(math.pi)
    assert cfg.flight_time == pytest.approx(0.36 / 1.5e8)


def test_screen_point_fringe_coordinate():
    cfg = base()
    p = ScreenPoint.from_polar(cfg, 1.0, 0.1)
    assert p.u == pytest.approx(2e-5)
    q = ScreenPoint.from_fringe(cfg, 1.0, -3e-6)
    assert q.r == pytest.approx(cfg.wheel_axis_offset - 3e-6)
    with pytest.raises(ValueError):
        ScreenPoint.from_polar(cfg, 0.0, -1.0)


# ---- pinhole A ----------------------------------------------------------------------------


def test_a_open_windows_quarter_turn():
    cfg = base(alpha=math.pi / 2, beta=math.pi, omega=TWO_PI)
    w = a_open_windows(cfg)
    assert w.period == pytest.approx(1.0)
    assert len(w) == 1 and w.intervals[0] == pytest.approx((0.25, 1.0))
    assert not a_open(cfg, 0.0) and not a_open(cfg, 0.2499) and a_open(cfg, 0.25)


def test_a_open_windows_tiny_alpha_open_all_period():
    cfg = base(alpha=1e-15, omega=TWO_PI)
    assert a_open_windows(cfg).measure == pytest.approx(1.0, abs=1e-14)


def test_a_open_closed_measure_fast_wheel():
    cfg = base(alpha=1.0, beta=2.0, omega=500 * RPS)
    closed = cfg.period - a_open_windows(cfg).measure
    assert closed == pytest.approx(1.0 / (1000 * math.pi), rel=1e-12)
    assert closed == pytest.approx(3.1831e-4, rel=1e-4)


def test_static_wheels_have_no_windows():
    cfg = base(omega=0.0)
    with pytest.raises(StaticConfigurationError):
        a_open_windows(cfg)
    assert a_eff(cfg, 1.0)
    assert predict_delta(cfg) == 0.0


def test_retardation_reference_value():
    cfg = reference_config()
    assert cfg.retardation == pytest.approx(4.0e-10, rel=1e-12)


def test_a_eff_infinite_is_a_open():
    cfg = base(v=INFINITE, omega=3.0)
    for t in np.linspace(0.0, 3 * cfg.period, 5001):
        assert a_eff(cfg, t) == a_open(cfg, t)


def test_a_eff_one_period_retardation_is_a_open():
    cfg = base(omega=TWO_PI, v=0.06)  # a2 / v = 1 s = period
    assert cfg.retardation == pytest.approx(cfg.period)
    ts = np.linspace(0.0, 2.0, 4001) + 1e-7
    assert all(a_eff(cfg, t) == a_open(cfg, t) for t in ts)


def test_a_eff_is_retarded_a_open():
    cfg = base(omega=2.0, v=0.3)
    for t in np.linspace(0.0, 10.0, 997):
        assert a_eff(cfg, t) == a_open(cfg, t - cfg.retardation)
    assert a_eff_windows(cfg).isclose(a_open_windows(cfg).shift(cfg.retardation))


# ---- rear wheel ---------------------------------------------------------------------------


def test_occlusion_needs_r_inside_wheel():
    cfg = base(omega=1.0)
    p = ScreenPoint.from_polar(cfg, cfg.theta - 0.1, cfg.R * 1.0001)
    assert not any(screen_occluded(cfg, p, t) for t in np.linspace(0, cfg.period, 101))


def test_near_full_disk_occludes_almost_always():
    eps = 1e-3
    cfg = base(alpha=0.1, beta=TWO_PI - eps, omega=1.0)
    p = ScreenPoint.from_polar(cfg, 2.0, 0.5 * cfg.R)
    ts = np.linspace(0.0, cfg.period, 200001)[:-1]
    exposed = sum(not screen_occluded(cfg, p, t) for t in ts) / ts.size
    assert exposed == pytest.approx(eps / TWO_PI, abs=2e-5)


def test_exposure_measure_by_numeric_integration():
    cfg = base(alpha=0.4, beta=4.0, omega=3.0)
    p = ScreenPoint.from_polar(cfg, 1.234, 0.9 * cfg.R)
    ts = np.linspace(0.0, cfg.period, 100001)[:-1]
    # oracle: integrate the exposure indicator over one period
    measure = sum(not screen_occluded(cfg, p, t) for t in ts) * (cfg.period / ts.size)
    assert measure == pytest.approx((TWO_PI - cfg.beta) / cfg.omega, rel=1e-3)


@settings(max_examples=60)
@given(st.floats(0.0, TWO_PI), st.floats(0.05, 5.0), st.floats(0.1, 6.0))
def test_exposure_windows_measure_any_phi(phi, omega, beta):
    cfg = base(alpha=0.05, beta=beta, omega=omega)
    assert exposure_windows(cfg, phi).measure == pytest.approx((TWO_PI - beta) / omega, rel=1e-12)


@settings(max_examples=60)
@given(st.floats(0.0, TWO_PI), st.floats(-1.0, 1.0))
def test_exposure_windows_rotational_symmetry(phi, dphi):
    cfg = base(omega=2.5)
    a = exposure_windows(cfg, phi)
    b = exposure_windows(cfg, phi + dphi)
    assert b.isclose(a.shift(dphi / cfg.omega), abs_tol=1e-9)


def test_exposure_windows_match_occlusion_indicator():
    cfg = base(alpha=0.3, beta=3.0, omega=1.7, v=0.2)
    for phi in (0.0, 1.0, 3.0, 5.5):
        win = exposure_windows(cfg, phi)
        p = ScreenPoint.from_polar(cfg, phi, 0.5 * cfg.R)
        for t in np.linspace(0.0, cfg.period, 733)[1:-1]:
            if min(abs(t - x) for iv in win for x in iv) < 1e-9:
                continue
            assert win.contains(t) == (not screen_occluded(cfg, p, t))


# ---- pure sector --------------------------------------------------------------------------


def _mixed_measure(cfg, phi):
    return (exposure_windows(cfg, phi) - a_eff_windows(cfg)).measure


def test_no_mixing_inside_predicted_sector():
    cfg = base(omega=10.0)
    sector = pure_sector(cfg)
    for phi in np.linspace(sector.start + 1e-9, sector.end - 1e-9, 101):
        assert _mixed_measure(cfg, phi) == 0.0


def test_pure_sector_infinite_v():
    cfg = base(v=INFINITE, omega=10.0)
    s = pure_sector(cfg)
    assert s.displacement == 0.0
    assert s.width == cfg.beta - cfg.alpha
    assert s.end % TWO_PI == pytest.approx(oe0_azimuth(cfg))


def test_pure_sector_desk_displacement():
    cfg = base(omega=10.0)
    s = pure_sector(cfg)
    assert s.displacement == pytest.approx(0.1, rel=1e-12)
    assert s.end % TWO_PI == pytest.approx(cfg.theta + 0.1)


def _brute_force_pure(cfg, phis, n_t=4000):
    """Time-sampling oracle built directly from the wheel geometry (no interval algebra)."""
    t = (np.arange(n_t) + 0.5) * (cfg.period / n_t)
    closed = np.mod(t - cfg.retardation, cfg.period) < cfg.alpha / cfg.omega
    out = np.empty(phis.size, dtype=bool)
    for i, phi in enumerate(phis):
        rel = np.mod(phi - (cfg.theta - cfg.beta) - cfg.omega * t, TWO_PI)
        exposed = rel > cfg.beta
        out[i] = not np.any(exposed & closed)
    return out


@pytest.mark.parametrize("v, omega", [(6.0, 10.0), (0.05, 1.0), (INFINITE, 4.0), (0.5, 50.0)])
def test_pure_sector_grid_oracles(v, omega):
    cfg = base(v=v, omega=omega, alpha=0.7, beta=3.9)
    sector = pure_sector(cfg)
    phis = np.linspace(0.0, TWO_PI, 10_000, endpoint=False)
    predicted = np.array([sector.contains(p) for p in phis])
    by_intervals = np.array([_mixed_measure(cfg, p) == 0.0 for p in phis])
    edge_dist = np.minimum(
        np.abs(np.mod(phis - sector.start + math.pi, TWO_PI) - math.pi),
        np.abs(np.mod(phis - sector.end + math.pi, TWO_PI) - math.pi),
    )
    away = edge_dist > 1e-9
    assert np.array_equal(predicted[away], by_intervals[away])
    sampled = _brute_force_pure(cfg, phis[::10])
    margin = 2 * TWO_PI / 4000
    keep = edge_dist[::10] > margin
    assert np.array_equal(predicted[::10][keep], sampled[keep])


@settings(max_examples=200)
@given(
    st.floats(0.01, 3.0),
    st.floats(0.01, 3.0),
    st.floats(0.01, 100.0),
    st.one_of(st.just(INFINITE), st.floats(1e-3, 1e3)),
)
def test_pure_sector_width_independent_of_v(alpha, extra, omega, v):
    beta = alpha + extra
    assume(beta < TWO_PI)
    cfg = base(alpha=alpha, beta=beta, omega=omega, v=v)
    s = pure_sector(cfg)
    assert abs(s.width - (beta - alpha)) <= 1e-12
    assert not s.empty
    assert 0.0 <= s.start < TWO_PI


def test_effective_status_agrees_with_scalar_rules():
    cfg = base(omega=10.0, alpha=0.4, beta=3.5)
    rng = np.random.default_rng(5)
    phi = rng.uniform(0, TWO_PI, 2000)
    t = rng.uniform(0, 50.0, 2000)
    open_eff, occ = effective_status(cfg, phi, t)
    for i in range(phi.size):
        p = ScreenPoint.from_polar(cfg, phi[i], 0.5 * cfg.R)
        assert open_eff[i] == a_eff(cfg, t[i])
        assert occ[i] == screen_occluded(cfg, p, t[i])


# ---- closed-form predictions --------------------------------------------------------------


def test_predict_delta_examples():
    assert predict_delta(base(omega=0.0)) == 0.0
    fast = reference_config(omega=500 * RPS)
    assert predict_delta(fast) == pytest.approx(500 * 2 * math.pi * 0.06 / 1.5e8, rel=1e-12)
    assert predict_delta(fast) == pytest.approx(1.2566e-6, rel=1e-4)
    assert predict_delta(base(v=INFINITE, omega=3.0)) == 0.0


@settings(max_examples=100)
@given(st.floats(0.01, 1e3), st.floats(1e-3, 1.0), st.floats(1e-2, 1e9))
def test_predict_delta_linearity(omega, a2, v):
    cfg = base(omega=omega, a2=a2, v=v)
    d = predict_delta(cfg)
    assert predict_delta(cfg.replace(omega=2 * omega)) == pytest.approx(2 * d, rel=1e-12)
    assert predict_delta(cfg.replace(a2=2 * a2)) == pytest.approx(2 * d, rel=1e-12)
    assert predict_delta(cfg.replace(v_response=2 * v)) == pytest.approx(d / 2, rel=1e-12)


@settings(max_examples=100)
@given(st.floats(0.0, 100.0), st.floats(0.1, 1e3), st.floats(1e-3, 1e9))
def test_speed_round_trip(w_s, dw, v):
    slow = base(omega=w_s, v=v)
    fast = slow.with_omega(w_s + dw)
    d_s, d_f = predict_delta(slow), predict_delta(fast)
    v_back = (fast.omega - slow.omega) * slow.a2 / (d_f - d_s)
    assert v_back == pytest.approx(v, rel=1e-9)


def test_shift_x_reference_numbers():
    # x = R * (500 - 10) * 2 pi * a2 / v
    slow, fast = reference_config(omega=10 * RPS), reference_config(omega=500 * RPS)
    x = predict_shift_x(slow, fast)
    assert x == pytest.approx(1232e-10, rel=0.01)
    assert x == pytest.approx(0.1 * 490 * 2 * math.pi * 0.06 / 1.5e8, rel=1e-12)
    slow_c, fast_c = reference_config(v=C_LIGHT, omega=10 * RPS), reference_config(v=C_LIGHT, omega=500 * RPS)
    assert predict_shift_x(slow_c, fast_c) == pytest.approx(616e-10, rel=0.01)


def test_shift_x_zero_and_mismatch():
    cfg = reference_config()
    assert predict_shift_x(cfg, cfg) == 0.0
    with pytest.raises(ConfigurationMismatch):
        predict_shift_x(cfg, cfg.replace(a2=0.07, omega=100.0))
