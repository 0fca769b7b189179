"""Landing-position distributions on the screen.

Two primitive patterns exist: both pinholes open (cosine fringes under a
Gaussian envelope) and pinhole B alone (the bare envelope). Everything the
detector accumulates is a time-weighted mixture of the two.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TRUNCATION = 6.0  # support half-width in units of envelope_sigma


class PatternKind(enum.Enum):
    BOTH_OPEN = "both_open"
    B_ONLY = "b_only"


@dataclass(frozen=True)
class FringePattern:
    lambda_fringe: float
    visibility: float = 1.0
    envelope_sigma: float | None = None
    u_center: float = 0.0

    def __post_init__(self):
        if not self.lambda_fringe > 0:
            raise ValueError(f"lambda_fringe must be > 0, got {self.lambda_fringe}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")
        if self.envelope_sigma is None:
            object.__setattr__(self, "envelope_sigma", 10.0 * self.lambda_fringe)
        if not self.envelope_sigma > 0:
            raise ValueError(f"envelope_sigma must be > 0, got {self.envelope_sigma}")

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.lambda_fringe

    @property
    def support(self):
        half = TRUNCATION * self.envelope_sigma
        return self.u_center - half, self.u_center + half

    @property
    def dark_fringe(self):
        """Fringe coordinate of the first dark fringe beside the centre."""
        return self.u_center + 0.5 * self.lambda_fringe

    def envelope(self, u):
        z = (np.asarray(u, dtype=float) - self.u_center) / self.envelope_sigma
        return np.exp(-0.5 * z * z)

    def physical_params(self):
        return {
            "lambda_fringe": self.lambda_fringe,
            "visibility": self.visibility,
            "envelope_sigma": self.envelope_sigma,
            "u_center": self.u_center,
        }


def intensity(pat, kind, u):
    """Unnormalised intensity of pattern ``kind`` at fringe coordinate ``u``."""
    env = pat.envelope(u)
    if kind is PatternKind.B_ONLY:
        return env
    phase = pat.wavenumber * (np.asarray(u, dtype=float) - pat.u_center)
    return env * (1.0 + pat.visibility * np.cos(phase))


@lru_cache(maxsize=8)
def _leggauss(order):
    return np.polynomial.legendre.leggauss(order)


def _gauss_legendre_panels(f, lo, hi, n_panels, order=16):
    x, w = _leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return (f(nodes) * w[None, :]).sum(axis=1) * half


@lru_cache(maxsize=64)
def normalisation(pat, kind):
    """Integral of ``intensity`` over the truncated support."""
    lo, hi = pat.support
    step = min(pat.lambda_fringe, pat.envelope_sigma) / 4.0
    n_panels = max(64, int(math.ceil((hi - lo) / step)))
    cells = _gauss_legendre_panels(lambda u: intensity(pat, kind, u), lo, hi, n_panels)
    return math.fsum(cells)


def pdf(pat, kind, u):
    """Probability density of landing at ``u``; zero outside the truncated support."""
    u = np.asarray(u, dtype=float)
    lo, hi = pat.support
    inside = (u >= lo) & (u <= hi)
    return np.where(inside, intensity(pat, kind, u), 0.0) / normalisation(pat, kind)


def bin_probabilities(pat, kind, edges):
    """Probability mass of each bin between consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    lo, hi = pat.support
    clipped = np.clip(edges, lo, hi)
    out = np.zeros(len(edges) - 1)
    step = min(pat.lambda_fringe, pat.envelope_sigma) / 8.0
    for i, (a, b) in enumerate(zip(clipped[:-1], clipped[1:])):
        if b <= a:
            continue
        n = max(1, int(math.ceil((b - a) / step)))
        out[i] = _gauss_legendre_panels(lambda u: intensity(pat, kind, u), a, b, n).sum()
    return out / normalisation(pat, kind)


@dataclass(frozen=True)
class Sampler:
    """Tabulated inverse CDF: maps uniform variates in [0, 1) to landing positions."""

    nodes: np.ndarray
    cdf: np.ndarray

    def __call__(self, variates):
        return np.interp(variates, self.cdf, self.nodes)


@lru_cache(maxsize=16)
def build_sampler(pat, kind, n_nodes=1 << 15):
    """Inverse-CDF table on ``n_nodes`` equally spaced nodes across the support.

    Cell masses come from Gauss-Legendre quadrature, so the density is treated
    as piecewise constant inside each cell and the inverse is piecewise linear
    (monotone by construction).
    """
    if n_nodes < 256:
        raise ValueError("n_nodes must be >= 256")
    lo, hi = pat.support
    nodes = np.linspace(lo, hi, n_nodes)
    masses = _gauss_legendre_panels(lambda u: intensity(pat, kind, u), lo, hi, n_nodes - 1, order=6)
    cdf = np.concatenate(([0.0], np.cumsum(masses)))
    cdf /= cdf[-1]
    return Sampler(nodes=nodes, cdf=cdf)
