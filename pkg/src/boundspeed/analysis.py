"""From detector grids to a boundary azimuth and a response-speed estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .apparatus import (
    a_eff_windows,
    check_same_geometry,
    exposure_windows,
    oe0_azimuth,
)
from .engine import TALLY_KEYS, DetectorGrid
from .errors import AmbiguousBoundaryError, ConfigurationMismatch, NoBoundaryError
from .patterns import PatternKind, bin_probabilities


def exposure_measures(cfg, phi):
    """Per-period exposure time of azimuth ``phi`` split by the retarded status of A.

    Returns ``(m_open, m_closed)`` in seconds.
    """
    exposed = exposure_windows(cfg, phi)
    eff_open = a_eff_windows(cfg)
    return (exposed & eff_open).measure, (exposed - eff_open).measure


def expected_pattern(cfg, pat, spec, proc=None, duration=None, n_emitted=None):
    """Noise-free expected counts on the grid ``spec``.

    The emitted total is ``n_emitted`` or, failing that, the mean number of
    emissions of ``proc`` within ``duration``. Azimuths are drawn uniformly over
    the grid's phi range exactly as in the Monte Carlo engine.
    """
    if n_emitted is None:
        if proc is None or duration is None:
            raise ValueError("need n_emitted or both proc and duration")
        n_emitted = duration / proc.mean_gap
    period = cfg.period
    phi = spec.phi_centers
    m = np.array([exposure_measures(cfg, p) for p in phi])
    m_open, m_closed = m[:, 0], m[:, 1]

    u_edges = spec.u_edges
    p_both = bin_probabilities(pat, PatternKind.BOTH_OPEN, u_edges)
    p_b = bin_probabilities(pat, PatternKind.B_ONLY, u_edges)
    beyond = cfg.wheel_axis_offset + spec.u_centers > cfg.R
    scale = n_emitted * (spec.phi_width / (spec.phi_range[1] - spec.phi_range[0])) / period
    counts = scale * (np.outer(m_open, p_both) + np.outer(m_closed, p_b))
    if beyond.any():
        eff_open = a_eff_windows(cfg).measure
        counts[:, beyond] = scale * (eff_open * p_both[beyond] + (period - eff_open) * p_b[beyond])

    detected = float(counts.sum())
    b_only = scale * m_closed * p_b[~beyond].sum()
    if beyond.any():
        b_only = b_only + scale * (period - a_eff_windows(cfg).measure) * p_b[beyond].sum()
    # pdf mass falling outside u_range is tallied as off-grid
    off_grid = scale * float((m_open * (1.0 - p_both.sum()) + m_closed * (1.0 - p_b.sum())).sum())
    tallies = {
        "total_emitted": float(n_emitted),
        "total_detected": detected,
        "total_off_grid": off_grid,
        "total_wheel_absorbed": float(n_emitted) - detected - off_grid,
        "detected_b_only": float(np.sum(b_only)),
    }
    return DetectorGrid(
        spec=spec,
        counts=counts,
        cfg=cfg,
        pat=pat,
        proc=proc,
        seed=None,
        elapsed_sim_time=float(duration) if duration is not None else 0.0,
        tallies=tallies,
        b_only_by_phi=np.asarray(b_only, dtype=float),
    )


@dataclass
class VisibilityProfile:
    """Fringe contrast at the known fringe frequency, one value per azimuth bin.

    Bins with fewer than ``n_min`` counts in the analysis window carry NaN.
    """

    phi_bins: np.ndarray
    v_est: np.ndarray
    v_sigma: np.ndarray
    phase: np.ndarray
    n_counts: np.ndarray
    bin_width: float
    plateau_hi: float = math.nan
    plateau_lo: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def defined(self):
        return np.isfinite(self.v_est)


def fourier_contrast(u, pat, weights=None, window_sigma=2.0):
    """Contrast of unbinned landing positions at frequency 1/lambda_fringe.

    Returns ``(contrast, sigma, phase)``; shot-noise bias is removed.
    """
    u = np.asarray(u, dtype=float)
    rel = u - pat.u_center
    half = _window_half_width(pat, window_sigma)
    inside = np.abs(rel) < half
    rel = rel[inside]
    w = 1.0 / pat.envelope(u[inside]) if weights is None else np.asarray(weights)[inside]
    s = np.sum(w * np.exp(1j * pat.wavenumber * rel))
    total = w.sum()
    q = np.sum(w * w)
    c = 2.0 * math.sqrt(max(abs(s) ** 2 - q, 0.0)) / total
    return c, math.sqrt(2.0 * q) / total, float(np.angle(s))


def _window_half_width(pat, window_sigma):
    n_fringes = max(1, math.floor(window_sigma * pat.envelope_sigma / pat.lambda_fringe))
    return n_fringes * pat.lambda_fringe


def visibility_profile(grid, n_min=100, window_sigma=2.0, edge_fraction=0.2):
    """Contrast-versus-azimuth profile of a detector grid.

    Counts inside a central window of whole fringes are weighted by the inverse
    Gaussian envelope, projected on ``exp(2 pi i u / lambda)`` and the noise
    floor ``sum(w^2 n)`` subtracted from ``|S|^2``. The result is divided by the
    attenuation ``sinc(h / lambda)`` caused by a u-bin width ``h``.
    """
    pat, spec = grid.pat, grid.spec
    rel = spec.u_centers - pat.u_center
    inside = np.abs(rel) < _window_half_width(pat, window_sigma)
    if not inside.any():
        raise ValueError("analysis window contains no u bins")
    w = 1.0 / pat.envelope(spec.u_centers[inside])
    basis = w * np.exp(1j * pat.wavenumber * rel[inside])
    counts = grid.counts[:, inside].astype(float)
    s = counts @ basis
    total = counts @ w
    q = counts @ (w * w)
    atten = float(np.sinc(spec.u_width / pat.lambda_fringe))
    n = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        if grid.expected:
            power = np.abs(s) ** 2
            sigma = np.zeros_like(total)
        else:
            power = np.maximum(np.abs(s) ** 2 - q, 0.0)
            sigma = np.sqrt(2.0 * q) / total / atten
        v = 2.0 * np.sqrt(power) / total / atten
    ok = n >= n_min
    profile = VisibilityProfile(
        phi_bins=spec.phi_centers,
        v_est=np.where(ok, v, np.nan),
        v_sigma=np.where(ok, sigma, np.nan),
        phase=np.where(ok, np.angle(s), np.nan),
        n_counts=n,
        bin_width=spec.phi_width,
        meta={"omega": grid.cfg.omega, "expected": grid.expected},
    )
    if np.count_nonzero(ok) >= 4:
        hi, lo, _ = fit_plateaus(profile.v_est[ok], edge_fraction)
        profile.plateau_hi, profile.plateau_lo = hi, lo
    return profile


def fit_plateaus(values, edge_fraction=0.2):
    """Levels of the first and last ``edge_fraction`` of ``values``.

    Returns ``(high, low, standard_error_of_difference)`` where "high" is the
    larger of the two levels.
    """
    n = values.size
    k = max(2, int(round(edge_fraction * n)))
    first, last = values[:k], values[-k:]
    a, b = first.mean(), last.mean()
    se = math.hypot(first.std(ddof=1) / math.sqrt(k), last.std(ddof=1) / math.sqrt(k))
    return (a, b, se) if a >= b else (b, a, se)


class Boundary(NamedTuple):
    phi: float
    sigma: float


def _crossings(phi, values, level):
    d = values - level
    above = d > 0
    idx = np.flatnonzero(above[1:] != above[:-1])
    out = []
    for i in idx:
        frac = d[i] / (d[i] - d[i + 1])
        out.append(phi[i] + frac * (phi[i + 1] - phi[i]))
    return out


def _locate(phi, values, edge_fraction):
    a = values[: max(2, int(round(edge_fraction * values.size)))].mean()
    b = values[-max(2, int(round(edge_fraction * values.size))):].mean()
    return _crossings(phi, values, 0.5 * (a + b))


def estimate_boundary(profile, n_boot=200, seed=0, edge_fraction=0.2, min_separation=5.0):
    """Azimuth where the profile crosses halfway between its two plateaus.

    The crossing is found by linear interpolation between the bracketing bins.
    Its uncertainty comes from a parametric bootstrap: every bin is redrawn from
    a normal law with its own contrast error, plateaus refitted and the crossing
    relocated (200 replicas by default).
    """
    ok = profile.defined
    phi = profile.phi_bins[ok]
    values = profile.v_est[ok]
    sig = profile.v_sigma[ok]
    if values.size < 4:
        raise NoBoundaryError("fewer than four defined bins in the profile")
    hi, lo, se = fit_plateaus(values, edge_fraction)
    if not hi - lo > 0 or hi - lo < min_separation * se:
        raise NoBoundaryError(
            f"plateaus {hi:.4g} and {lo:.4g} are not separated by {min_separation} standard errors ({se:.3g})"
        )
    found = _crossings(phi, values, 0.5 * (hi + lo))
    if not found:
        raise NoBoundaryError("profile never crosses the midpoint between plateaus")
    if len(found) > 1:
        raise AmbiguousBoundaryError("profile crosses the plateau midpoint more than once", found)
    phi_b = found[0]

    if n_boot <= 0 or not np.any(sig > 0):
        return Boundary(phi_b, 0.0)
    rng = np.random.default_rng(seed)
    replicas = []
    for _ in range(n_boot):
        trial = values + rng.normal(0.0, 1.0, values.size) * sig
        cands = _locate(phi, trial, edge_fraction)
        if cands:
            replicas.append(min(cands, key=lambda c: abs(c - phi_b)))
    if len(replicas) < 2:
        raise NoBoundaryError("bootstrap replicas failed to locate a crossing")
    return Boundary(phi_b, float(np.std(replicas, ddof=1)))


@dataclass(frozen=True)
class SpeedEstimate:
    phi_b_slow: float
    phi_b_fast: float
    sigma_slow: float
    sigma_fast: float
    delta_slow: float
    delta_fast: float
    delta_diff: float
    delta_sigma: float
    omega_slow: float
    omega_fast: float
    a2: float
    R: float
    v_hat: float
    v_sigma: float
    v_infinite: bool
    v_lower_bound: float
    x_hat: float

    def __post_init__(self):
        # plain Python scalars so reports serialise cleanly
        for name, f in self.__dataclass_fields__.items():
            cast = bool if f.type == "bool" else float
            object.__setattr__(self, name, cast(getattr(self, name)))

    @property
    def delta_omega(self):
        return self.omega_fast - self.omega_slow

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


SHIFT_FLOOR = 1e-12  # rad


def speed_from_shift(omega_slow, omega_fast, a2, R, delta_diff, delta_sigma=0.0, **extra):
    """Turn a boundary shift (and its error) into a response speed.

    Per-run boundary fields not given in ``extra`` are filled with NaN.
    """
    for key in ("phi_b_slow", "phi_b_fast", "sigma_slow", "sigma_fast", "delta_slow", "delta_fast"):
        extra.setdefault(key, math.nan)
    d_omega = omega_fast - omega_slow
    # the floor keeps noiseless oracle shifts of pure rounding size from reading as finite v
    infinite = abs(delta_diff) <= 2.0 * delta_sigma + SHIFT_FLOOR
    if infinite:
        v_hat, v_sigma = math.inf, math.inf
        bound = abs(delta_diff) + 2.0 * delta_sigma
        v_lower = math.inf if bound == 0 else abs(d_omega) * a2 / bound
    else:
        v_hat = d_omega * a2 / delta_diff
        v_sigma = abs(v_hat) * delta_sigma / abs(delta_diff)
        v_lower = abs(d_omega) * a2 / (abs(delta_diff) + 2.0 * delta_sigma)
    return SpeedEstimate(
        delta_diff=delta_diff,
        delta_sigma=delta_sigma,
        omega_slow=omega_slow,
        omega_fast=omega_fast,
        a2=a2,
        R=R,
        v_hat=v_hat,
        v_sigma=v_sigma,
        v_infinite=infinite,
        v_lower_bound=v_lower,
        x_hat=R * delta_diff,
        **extra,
    )


def estimate_v(
    run_slow, run_fast, *, n_min=100, window_sigma=2.0, edge_fraction=0.2, n_boot=200, seed=0, profiles=None
):
    """Response speed from a slow and a fast run of the same apparatus.

    If ``profiles`` is a list, the slow and fast visibility profiles are appended to it.
    """
    check_same_geometry(run_slow.cfg, run_fast.cfg)
    if run_slow.pat != run_fast.pat or run_slow.spec != run_fast.spec:
        raise ConfigurationMismatch("runs differ in fringe pattern or binning")
    kw = dict(n_min=n_min, window_sigma=window_sigma, edge_fraction=edge_fraction)
    prof_s = visibility_profile(run_slow, **kw)
    prof_f = visibility_profile(run_fast, **kw)
    if profiles is not None:
        profiles.extend((prof_s, prof_f))
    b_s = estimate_boundary(prof_s, n_boot=n_boot, seed=seed, edge_fraction=edge_fraction)
    b_f = estimate_boundary(prof_f, n_boot=n_boot, seed=seed + 1, edge_fraction=edge_fraction)
    ref = oe0_azimuth(run_slow.cfg)
    return speed_from_shift(
        run_slow.cfg.omega,
        run_fast.cfg.omega,
        run_fast.cfg.a2,
        run_fast.cfg.R,
        b_f.phi - b_s.phi,
        math.hypot(b_s.sigma, b_f.sigma),
        phi_b_slow=b_s.phi,
        phi_b_fast=b_f.phi,
        sigma_slow=b_s.sigma,
        sigma_fast=b_f.sigma,
        delta_slow=b_s.phi - ref,
        delta_fast=b_f.phi - ref,
    )
