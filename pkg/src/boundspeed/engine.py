"""Monte Carlo particle-by-particle exposure of the detector."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .apparatus import ApparatusConfig, predict_delta, wrap_angle
from .errors import ConfigError, ConfigurationMismatch
from .patterns import FringePattern, PatternKind, build_sampler

log = logging.getLogger(__name__)

THREADS_ENV = "BOUNDSPEED_THREADS"
BATCH = 1 << 20
DEFAULT_CHUNKS = 64


@dataclass(frozen=True)
class EmissionProcess:
    """One-particle-at-a-time source.

    After each arrival the source stays dark for ``dead_time`` and then emits
    after an exponential wait of mean ``1/mean_rate``.
    """

    mean_rate: float
    dead_time: float
    flight_time: float

    def __post_init__(self):
        if not self.mean_rate > 0:
            raise ConfigError(f"mean_rate must be > 0, got {self.mean_rate}", key="mean_rate")
        if not self.dead_time >= 0:
            raise ConfigError(f"dead_time must be >= 0, got {self.dead_time}", key="dead_time")
        if not self.flight_time >= 0:
            raise ConfigError("flight_time must be >= 0", key="flight_time")

    @classmethod
    def for_apparatus(cls, cfg, mean_rate, dead_time=0.0):
        return cls(mean_rate=mean_rate, dead_time=dead_time, flight_time=cfg.flight_time)

    @property
    def mean_gap(self):
        """Mean time between successive emissions."""
        return self.flight_time + self.dead_time + 1.0 / self.mean_rate

    def physical_params(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class GridSpec:
    n_phi: int
    n_u: int
    phi_range: tuple
    u_range: tuple

    def __post_init__(self):
        object.__setattr__(self, "phi_range", tuple(float(x) for x in self.phi_range))
        object.__setattr__(self, "u_range", tuple(float(x) for x in self.u_range))
        if self.n_phi < 1 or self.n_u < 1:
            raise ConfigError("grid needs at least one bin along each axis")
        if not self.phi_range[1] > self.phi_range[0]:
            raise ConfigError(f"empty phi_range {self.phi_range}", key="phi_range")
        if not self.u_range[1] > self.u_range[0]:
            raise ConfigError(f"empty u_range {self.u_range}", key="u_range")

    @property
    def phi_edges(self):
        return np.linspace(*self.phi_range, self.n_phi + 1)

    @property
    def u_edges(self):
        return np.linspace(*self.u_range, self.n_u + 1)

    @property
    def phi_centers(self):
        e = self.phi_edges
        return 0.5 * (e[1:] + e[:-1])

    @property
    def u_centers(self):
        e = self.u_edges
        return 0.5 * (e[1:] + e[:-1])

    @property
    def phi_width(self):
        return (self.phi_range[1] - self.phi_range[0]) / self.n_phi

    @property
    def u_width(self):
        return (self.u_range[1] - self.u_range[0]) / self.n_u

    @classmethod
    def around_pattern(cls, pat, n_phi, n_u, phi_range):
        """Grid whose u axis spans the full truncated support of ``pat``."""
        return cls(n_phi=n_phi, n_u=n_u, phi_range=phi_range, u_range=pat.support)


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_fingerprint(cfg, pat, proc=None, exclude=()):
    """Hash of the canonicalised physical parameters (hex, 16 chars)."""
    params = {"apparatus": cfg.physical_params(), "pattern": pat.physical_params()}
    if proc is not None:
        params["emission"] = proc.physical_params()
    for key in exclude:
        params["apparatus"].pop(key, None)
    return hashlib.sha256(_canonical(params).encode()).hexdigest()[:16]


TALLY_KEYS = ("total_emitted", "total_wheel_absorbed", "total_detected", "total_off_grid", "detected_b_only")


@dataclass
class DetectorGrid:
    """Counts over (azimuth, fringe coordinate) plus run bookkeeping.

    ``counts`` holds integers for simulated runs and real expectation values
    for the noise-free oracle (``expected=True``).
    """

    spec: GridSpec
    counts: np.ndarray
    cfg: ApparatusConfig
    pat: FringePattern
    proc: EmissionProcess | None
    seed: int | None = None
    elapsed_sim_time: float = 0.0
    tallies: dict = field(default_factory=lambda: dict.fromkeys(TALLY_KEYS, 0))
    b_only_by_phi: np.ndarray | None = None

    def __post_init__(self):
        if self.counts.shape != (self.spec.n_phi, self.spec.n_u):
            raise ValueError(f"counts shape {self.counts.shape} does not match grid spec")
        if self.b_only_by_phi is None:
            self.b_only_by_phi = np.zeros(self.spec.n_phi, dtype=self.counts.dtype)

    @property
    def expected(self):
        return self.counts.dtype.kind == "f"

    @property
    def fingerprint(self):
        return config_fingerprint(self.cfg, self.pat, self.proc)

    @property
    def r_band(self):
        off = self.cfg.wheel_axis_offset
        return off + self.spec.u_range[0], off + self.spec.u_range[1]

    @property
    def total_detected(self):
        return self.tallies["total_detected"]

    @classmethod
    def empty_like(cls, grid):
        return cls(
            spec=grid.spec,
            counts=np.zeros_like(grid.counts),
            cfg=grid.cfg,
            pat=grid.pat,
            proc=grid.proc,
            seed=grid.seed,
        )

    def equals(self, other):
        return (
            self.spec == other.spec
            and self.fingerprint == other.fingerprint
            and self.seed == other.seed
            and self.elapsed_sim_time == other.elapsed_sim_time
            and self.tallies == other.tallies
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.b_only_by_phi, other.b_only_by_phi)
        )


def merge(g1, g2):
    """Elementwise sum of two grids with identical binning and configuration."""
    if g1.spec != g2.spec:
        raise ConfigurationMismatch("grids use different binning")
    if g1.fingerprint != g2.fingerprint:
        raise ConfigurationMismatch(f"config fingerprints differ: {g1.fingerprint} vs {g2.fingerprint}")
    return DetectorGrid(
        spec=g1.spec,
        counts=g1.counts + g2.counts,
        cfg=g1.cfg,
        pat=g1.pat,
        proc=g1.proc,
        seed=g1.seed if g1.seed == g2.seed else None,
        elapsed_sim_time=g1.elapsed_sim_time + g2.elapsed_sim_time,
        tallies={k: g1.tallies[k] + g2.tallies[k] for k in TALLY_KEYS},
        b_only_by_phi=g1.b_only_by_phi + g2.b_only_by_phi,
    )


def default_workers():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None


DISPOSITIONS = ("detected", "wheel_absorbed", "off_grid")


@dataclass
class _ChunkResult:
    counts: np.ndarray
    b_only_by_phi: np.ndarray
    tallies: dict
    events: list | None = None


class _Simulator:
    def __init__(self, cfg, pat, proc, grid, seed, chunk_edges, keep_events, n_nodes):
        self.cfg = cfg
        self.pat = pat
        self.proc = proc
        self.grid = grid
        self.seed = seed
        self.chunk_edges = chunk_edges
        self.keep_events = keep_events
        self.samplers = {
            True: build_sampler(pat, PatternKind.BOTH_OPEN, n_nodes),
            False: build_sampler(pat, PatternKind.B_ONLY, n_nodes),
        }
        # landings can only miss the rear wheel radially if the support pokes past R
        self.radial_escape = cfg.wheel_axis_offset + pat.support[1] > cfg.R

    def chunk_rng(self, k):
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(k,)))

    def __call__(self, k):
        cfg, proc, grid = self.cfg, self.proc, self.grid
        t0, t1 = self.chunk_edges[k], self.chunk_edges[k + 1]
        rng = self.chunk_rng(k)
        n_phi, n_u = grid.n_phi, grid.n_u
        counts = np.zeros(n_phi * n_u, dtype=np.int64)
        b_only = np.zeros(n_phi, dtype=np.int64)
        tallies = dict.fromkeys(TALLY_KEYS, 0)
        events = [] if self.keep_events else None
        phi_lo, phi_hi = grid.phi_range
        cursor = t0
        expected = (t1 - t0) / proc.mean_gap
        size = int(min(BATCH, expected + 6.0 * math.sqrt(expected) + 64))
        arrival = np.empty(size)
        open_eff = np.empty(size, dtype=np.bool_)
        occluded = np.empty(size, dtype=np.bool_)
        delta = float(wrap_angle(predict_delta(cfg)))
        while True:
            waits = rng.standard_exponential(size)
            waits /= proc.mean_rate
            phi = rng.uniform(phi_lo, phi_hi, size)
            n = _advance(
                waits, phi, proc.flight_time + proc.dead_time, cursor, t1,
                cfg.omega, cfg.rear_phase, cfg.alpha, cfg.beta, delta,
                arrival, open_eff, occluded,
            )
            if n:
                cursor = arrival[n - 1]
                self._bin(rng, arrival[:n], phi[:n], open_eff[:n], occluded[:n].copy(),
                          counts, b_only, tallies, events)
            if n < size:
                break
        return _ChunkResult(counts.reshape(n_phi, n_u), b_only, tallies, events)

    def _bin(self, rng, arrival, phi, open_eff, occluded, counts, b_only, tallies, events):
        cfg, grid = self.cfg, self.grid
        n = arrival.size
        if self.radial_escape:
            cand = np.arange(n)
        else:
            cand = np.flatnonzero(~occluded)
        variates = rng.random(cand.size)
        u_c = np.empty(cand.size)
        open_c = open_eff[cand]
        for kind_open, sampler in self.samplers.items():
            sel = open_c if kind_open else ~open_c
            u_c[sel] = sampler(variates[sel])
        if self.radial_escape:
            occluded[cand] &= cfg.wheel_axis_offset + u_c <= cfg.R
            keep = ~occluded[cand]
            cand, u_c, open_c = cand[keep], u_c[keep], open_c[keep]
        u_lo, u_hi = grid.u_range
        on = (u_c >= u_lo) & (u_c < u_hi)
        n_exposed = cand.size
        n_on = int(np.count_nonzero(on))
        iphi = ((phi[cand[on]] - grid.phi_range[0]) / grid.phi_width).astype(np.int64)
        np.clip(iphi, 0, grid.n_phi - 1, out=iphi)
        iu = ((u_c[on] - u_lo) / grid.u_width).astype(np.int64)
        np.clip(iu, 0, grid.n_u - 1, out=iu)
        counts += np.bincount(iphi * grid.n_u + iu, minlength=counts.size)
        b_sel = ~open_c[on]
        b_only += np.bincount(iphi[b_sel], minlength=grid.n_phi)
        tallies["total_emitted"] += n
        tallies["total_wheel_absorbed"] += n - n_exposed
        tallies["total_off_grid"] += n_exposed - n_on
        tallies["total_detected"] += n_on
        tallies["detected_b_only"] += int(np.count_nonzero(b_sel))
        if events is not None:
            u = np.full(n, np.nan)
            u[cand] = u_c
            disposition = np.full(n, 1, dtype=np.int8)
            disposition[cand] = np.where(on, 0, 2)
            events.append((arrival.copy(), phi.copy(), open_eff.copy(), u, disposition))


@njit(cache=True, nogil=True)
def _advance(waits, phi, step, cursor, t_end, omega, rear_phase, alpha, beta, delta,
             arrival, open_eff, occluded):
    """Accumulate arrival times and classify each particle until ``t_end``.

    Returns the number of particles arriving before ``t_end``. Mirrors
    ``apparatus.effective_status``: both flags come from one reduced phase.
    """
    two_pi = 2.0 * np.pi
    inv = 1.0 / two_pi
    c = cursor
    for i in range(waits.size):
        c = c + (waits[i] + step)
        if c >= t_end:
            return i
        arrival[i] = c
        x = omega * c
        phase = x - two_pi * np.floor(x * inv)
        y = phi[i] - rear_phase
        s = y - two_pi * np.floor(y * inv)
        d = s - phase
        if d < 0.0:
            d += two_pi
        occluded[i] = d <= beta
        if omega == 0.0:
            open_eff[i] = True
        else:
            p = phase - delta if delta != 0.0 else phase
            if p < 0.0:
                p += two_pi
            open_eff[i] = not (p < alpha)
    return waits.size


def chunk_edges(duration, n_chunks=DEFAULT_CHUNKS):
    return np.linspace(0.0, duration, n_chunks + 1)


def run(
    cfg,
    pat,
    proc,
    duration,
    seed,
    grid,
    *,
    workers=None,
    n_chunks=DEFAULT_CHUNKS,
    chunks=None,
    event_log=None,
    n_nodes=1 << 15,
):
    """Simulate ``duration`` seconds of single-particle exposure.

    Simulated time is cut into ``n_chunks`` fixed chunks, each with its own
    random stream derived from ``seed`` and the chunk index. A particle is only
    kept if it arrives before its chunk ends, so no flight straddles a chunk
    boundary and the result does not depend on ``workers``. ``chunks`` restricts
    the run to a subset of chunk indices (merging the pieces reproduces the full
    run).

    Parameters
    ----------
    grid : GridSpec
        Binning of the detector.
    event_log : path-like, optional
        Write one CSV row per emitted particle. Only sensible for short runs.
    """
    if not duration > 0:
        raise ConfigError(f"duration must be > 0, got {duration}", key="duration")
    if cfg.omega > 0 and duration < 100 * cfg.period:
        warnings.warn(
            f"duration {duration:g} s covers only {duration / cfg.period:.1f} wheel rotations (< 100)",
            RuntimeWarning,
            stacklevel=2,
        )
    workers = default_workers() if workers is None else int(workers)
    edges = chunk_edges(duration, n_chunks)
    indices = range(n_chunks) if chunks is None else sorted(set(chunks))
    sim = _Simulator(cfg, pat, proc, grid, seed, edges, event_log is not None, n_nodes)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(sim, indices))
    else:
        results = [sim(k) for k in indices]

    counts = np.zeros((grid.n_phi, grid.n_u), dtype=np.int64)
    b_only = np.zeros(grid.n_phi, dtype=np.int64)
    tallies = dict.fromkeys(TALLY_KEYS, 0)
    for res in results:
        counts += res.counts
        b_only += res.b_only_by_phi
        for key in TALLY_KEYS:
            tallies[key] += res.tallies[key]
    elapsed = math.fsum(edges[k + 1] - edges[k] for k in indices)
    log.info("run seed=%s emitted=%d detected=%d", seed, tallies["total_emitted"], tallies["total_detected"])
    if event_log is not None:
        write_event_log(event_log, [ev for res in results for ev in res.events], proc.flight_time)
    return DetectorGrid(
        spec=grid,
        counts=counts,
        cfg=cfg,
        pat=pat,
        proc=proc,
        seed=seed,
        elapsed_sim_time=elapsed,
        tallies=tallies,
        b_only_by_phi=b_only,
    )


def write_event_log(path, batches, flight_time):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["emission_time", "arrival_time", "kind", "u", "phi", "disposition"])
        for arrival, phi, open_eff, u, disposition in batches:
            for i in range(arrival.size):
                writer.writerow(
                    [
                        repr(float(arrival[i] - flight_time)),
                        repr(float(arrival[i])),
                        PatternKind.BOTH_OPEN.value if open_eff[i] else PatternKind.B_ONLY.value,
                        "" if np.isnan(u[i]) else repr(float(u[i])),
                        repr(float(phi[i])),
                        DISPOSITIONS[disposition[i]],
                    ]
                )


def read_event_log(path):
    """Load an event log as a dict of numpy arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {
        "emission_time": np.array([float(r["emission_time"]) for r in rows]),
        "arrival_time": np.array([float(r["arrival_time"]) for r in rows]),
        "kind": np.array([r["kind"] for r in rows]),
        "u": np.array([float(r["u"]) if r["u"] else np.nan for r in rows]),
        "phi": np.array([float(r["phi"]) for r in rows]),
        "disposition": np.array([r["disposition"] for r in rows]),
    }
    return out
