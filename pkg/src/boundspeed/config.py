"""Run configuration files.

An INI-style document with sections ``[apparatus]``, ``[pattern]``,
``[emission]``, ``[run]`` and ``[analysis]``. Every dimensioned value carries
a unit suffix, e.g. ``a2 = 6 cm`` or ``omega = 500 rps``; values are converted
to SI (radians, rad/s) while parsing.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .apparatus import ApparatusConfig
from .engine import DEFAULT_CHUNKS, EmissionProcess, GridSpec
from .errors import ConfigError
from .patterns import FringePattern

UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "A": 1e-10},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "angular_speed": {"rad_s": 1.0, "rps": 2.0 * math.pi},
    "speed": {"mps": 1.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "rate": {"Hz": 1.0, "per_s": 1.0},
}

# key -> (dimension or None for plain numbers, required, default)
SCHEMA = {
    "apparatus": {
        "a1": ("length", True, None),
        "a2": ("length", True, None),
        "b1": ("length", True, None),
        "b2": ("length", True, None),
        "v0": ("speed", True, None),
        "v_response": ("speed", True, None),
        "R": ("length", True, None),
        "alpha": ("angle", True, None),
        "beta": ("angle", True, None),
        "theta": ("angle", True, None),
        "omega": ("angular_speed", True, None),
        "wheel_axis_offset": ("length", True, None),
        "c_light": ("speed", False, None),
    },
    "pattern": {
        "lambda_fringe": ("length", True, None),
        "visibility": (None, False, 1.0),
        "envelope_sigma": ("length", False, None),
        "u_center": ("length", False, 0.0),
    },
    "emission": {
        "mean_rate": ("rate", True, None),
        "dead_time": ("time", False, 0.0),
    },
    "run": {
        "duration": ("time", False, None),
        "seed": ("int", False, 0),
        "omega_slow": ("angular_speed", False, None),
        "omega_fast": ("angular_speed", False, None),
        "n_phi": ("int", False, 80),
        "n_u": ("int", False, 480),
        "band_start": ("angle", False, None),
        "band_end": ("angle", False, None),
        "u_min": ("length", False, None),
        "u_max": ("length", False, None),
        "n_chunks": ("int", False, DEFAULT_CHUNKS),
        "workers": ("int", False, None),
    },
    "analysis": {
        "n_min": ("int", False, 100),
        "window_sigma": (None, False, 2.0),
        "edge_fraction": (None, False, 0.2),
        "bootstrap": ("int", False, 200),
        "bootstrap_seed": ("int", False, 0),
    },
}

REQUIRED_SECTIONS = ("apparatus", "pattern", "emission")
_INFINITE = {"inf", "infinite", "infinity"}
_VALUE_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z_]*)\s*$")


@dataclass(frozen=True)
class AnalysisOptions:
    n_min: int = 100
    window_sigma: float = 2.0
    edge_fraction: float = 0.2
    bootstrap: int = 200
    bootstrap_seed: int = 0


@dataclass(frozen=True)
class RunOptions:
    duration: float | None
    seed: int
    omega_slow: float | None
    omega_fast: float | None
    grid: GridSpec
    n_chunks: int = DEFAULT_CHUNKS
    workers: int | None = None
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)


@dataclass(frozen=True)
class RunConfig:
    apparatus: ApparatusConfig
    pattern: FringePattern
    emission: EmissionProcess
    run: RunOptions
    source: str | None = None

    def __iter__(self):
        return iter((self.apparatus, self.pattern, self.emission, self.run))

    def at_speed(self, which):
        """Apparatus with omega set from the ``[run]`` slow/fast entries."""
        omega = {"slow": self.run.omega_slow, "fast": self.run.omega_fast}[which]
        if omega is None:
            raise ConfigError(f"[run] omega_{which} is not set", key=f"omega_{which}")
        return self.apparatus.with_omega(omega)


def parse_quantity(text, dimension, *, key=None, lineno=None, allow_infinite=False):
    """Convert ``"<number> <unit>"`` to SI. Plain numbers need ``dimension=None``."""
    raw = text.strip()
    head = raw.split()[0].lower() if raw else ""
    if allow_infinite and head in _INFINITE:
        return math.inf
    if dimension == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}", key=key, lineno=lineno) from None
    m = _VALUE_RE.match(raw)
    if not m:
        raise ConfigError(f"{key}: cannot parse {raw!r} as a number with unit", key=key, lineno=lineno)
    number, unit = float(m.group(1)), m.group(2)
    if dimension is None:
        if unit:
            raise ConfigError(f"{key}: dimensionless value must not carry a unit ({unit!r})", key=key, lineno=lineno)
        return number
    table = UNITS[dimension]
    if not unit:
        raise ConfigError(
            f"{key}: unit suffix required (one of {', '.join(table)})", key=key, lineno=lineno
        )
    if unit not in table:
        raise ConfigError(
            f"{key}: unit {unit!r} is not a {dimension} unit (one of {', '.join(table)})",
            key=key,
            lineno=lineno,
        )
    return number * table[unit]


def _line_numbers(text):
    """Map (section, key) to the 1-based line number where the key is set."""
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            where[(section, None)] = lineno
        elif "=" in stripped and section is not None:
            where[(section, stripped.split("=", 1)[0].strip())] = lineno
    return where


def parse_config_text(text, source=None):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"syntax error: {exc.errors[0][1].strip() if exc.errors else exc}", lineno=lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).splitlines()[0], lineno=exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", lineno=exc.lineno) from None

    lines = _line_numbers(text)
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", lineno=lines.get((section, None)))
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]", key=section)
    for section, schema in SCHEMA.items():
        present = parser[section] if parser.has_section(section) else {}
        for key in present:
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]", key=key, lineno=lines.get((section, key)))
        out = {}
        for key, (dim, required, default) in schema.items():
            if key not in present:
                if required:
                    raise ConfigError(f"missing required key {key!r} in [{section}]", key=key)
                out[key] = default
                continue
            out[key] = parse_quantity(
                present[key],
                dim,
                key=key,
                lineno=lines.get((section, key)),
                allow_infinite=(key == "v_response"),
            )
        values[section] = out
    return _build(values, lines, source)


def _validated(factory, section, lines, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError as exc:
        if exc.lineno is None and exc.key is not None:
            raise ConfigError(str(exc), key=exc.key, lineno=lines.get((section, exc.key))) from None
        raise
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _build(values, lines, source):
    app = dict(values["apparatus"])
    if app["c_light"] is None:
        del app["c_light"]
    cfg = _validated(ApparatusConfig, "apparatus", lines, **app)
    pat = _validated(FringePattern, "pattern", lines, **values["pattern"])
    em = values["emission"]
    proc = _validated(
        EmissionProcess, "emission", lines,
        mean_rate=em["mean_rate"], dead_time=em["dead_time"], flight_time=cfg.flight_time,
    )
    r = values["run"]
    lo, hi = pat.support
    u_range = (r["u_min"] if r["u_min"] is not None else lo, r["u_max"] if r["u_max"] is not None else hi)
    band_start = r["band_start"] if r["band_start"] is not None else -(cfg.gamma / 2.0)
    band_end = r["band_end"] if r["band_end"] is not None else (2.0 * math.pi - cfg.beta) / 2.0
    phi_range = (cfg.theta + band_start, cfg.theta + band_end)
    grid = _validated(GridSpec, "run", lines, n_phi=r["n_phi"], n_u=r["n_u"], phi_range=phi_range, u_range=u_range)
    if r["duration"] is not None and not r["duration"] > 0:
        raise ConfigError("duration must be > 0", key="duration", lineno=lines.get(("run", "duration")))
    for key in ("omega_slow", "omega_fast"):
        if r[key] is not None and not r[key] >= 0:
            raise ConfigError(f"{key} must be >= 0", key=key, lineno=lines.get(("run", key)))
    a = values["analysis"]
    analysis = AnalysisOptions(
        n_min=a["n_min"],
        window_sigma=a["window_sigma"],
        edge_fraction=a["edge_fraction"],
        bootstrap=a["bootstrap"],
        bootstrap_seed=a["bootstrap_seed"],
    )
    run = RunOptions(
        duration=r["duration"],
        seed=r["seed"],
        omega_slow=r["omega_slow"],
        omega_fast=r["omega_fast"],
        grid=grid,
        n_chunks=r["n_chunks"],
        workers=r["workers"],
        analysis=analysis,
    )
    return RunConfig(cfg, pat, proc, run, source)


def parse_config(path):
    """Read and validate a configuration file.

    Returns a ``RunConfig`` that unpacks as ``(apparatus, pattern, emission, run)``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError:
        raise
    return parse_config_text(text, source=str(path))
