"""Grid, profile and report files."""

from __future__ import annotations

import datetime as _dt
import json
import math
import warnings

import numpy as np

from . import __version__
from .apparatus import ApparatusConfig, ResponseSpeedWarning
from .engine import TALLY_KEYS, DetectorGrid, EmissionProcess, GridSpec
from .errors import GridFormatError
from .patterns import FringePattern

GRID_MAGIC = "boundspeed-grid 1"
GRID_COLUMNS = "phi_index,u_index,count"


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _grid_header(grid):
    spec = grid.spec
    config = {
        "apparatus": grid.cfg.physical_params(),
        "pattern": grid.pat.physical_params(),
        "emission": None if grid.proc is None else grid.proc.physical_params(),
    }
    b_only = grid.b_only_by_phi.tolist()
    return [
        GRID_MAGIC,
        f"fingerprint: {grid.fingerprint}",
        f"seed: {_dumps(grid.seed)}",
        f"value_type: {'float' if grid.expected else 'int'}",
        "binning: "
        + _dumps({"n_phi": spec.n_phi, "n_u": spec.n_u, "phi_range": spec.phi_range, "u_range": spec.u_range}),
        f"elapsed_sim_time: {_dumps(grid.elapsed_sim_time)}",
        f"tallies: {_dumps(grid.tallies)}",
        f"b_only_by_phi: {_dumps(b_only)}",
        f"config: {_dumps(config)}",
    ]


def write_grid(path, grid):
    """Write ``grid`` as CSV: ``#`` header lines, then one row per cell, row-major."""
    n_phi, n_u = grid.counts.shape
    i = np.repeat(np.arange(n_phi), n_u).tolist()
    j = np.tile(np.arange(n_u), n_phi).tolist()
    values = grid.counts.ravel().tolist()
    fmt = repr if grid.expected else str
    with open(path, "w", newline="\n") as fh:
        for line in _grid_header(grid):
            fh.write(f"# {line}\n")
        fh.write(GRID_COLUMNS + "\n")
        fh.writelines(f"{a},{b},{fmt(c)}\n" for a, b, c in zip(i, j, values))


def _parse_header(lines, path):
    if not lines or lines[0] != GRID_MAGIC:
        raise GridFormatError(f"{path}: not a grid file (missing '# {GRID_MAGIC}' header)")
    fields = {}
    for line in lines[1:]:
        key, sep, value = line.partition(": ")
        if not sep:
            raise GridFormatError(f"{path}: malformed header line {line!r}")
        try:
            fields[key] = value if key in ("fingerprint", "value_type") else json.loads(value)
        except json.JSONDecodeError as exc:
            raise GridFormatError(f"{path}: bad JSON in header {key!r}: {exc}") from None
    missing = {"fingerprint", "seed", "value_type", "binning", "tallies", "config", "b_only_by_phi"} - set(fields)
    if missing:
        raise GridFormatError(f"{path}: header lacks {', '.join(sorted(missing))}")
    return fields


def read_grid(path):
    """Inverse of ``write_grid``. Counts come back bit-for-bit."""
    header = []
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                columns = line.strip()
                break
            header.append(line[1:].strip())
        else:
            columns = ""
    if columns != GRID_COLUMNS:
        raise GridFormatError(f"{path}: expected column line {GRID_COLUMNS!r}, got {columns!r}")
    fields = _parse_header(header, path)
    is_float = fields["value_type"] == "float"
    dtype = np.float64 if is_float else np.int64
    try:
        b = fields["binning"]
        spec = GridSpec(n_phi=b["n_phi"], n_u=b["n_u"], phi_range=b["phi_range"], u_range=b["u_range"])
        conf = fields["config"]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResponseSpeedWarning)
            cfg = ApparatusConfig(**conf["apparatus"])
        pat = FringePattern(**conf["pattern"])
        proc = None if conf["emission"] is None else EmissionProcess(**conf["emission"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GridFormatError(f"{path}: invalid header contents: {exc}") from None

    n_rows = spec.n_phi * spec.n_u
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            idx = np.loadtxt(path, delimiter=",", skiprows=len(header) + 1, usecols=(0, 1), dtype=np.int64, ndmin=2)
            vals = np.loadtxt(path, delimiter=",", skiprows=len(header) + 1, usecols=2, dtype=dtype, ndmin=1)
    except ValueError as exc:
        raise GridFormatError(f"{path}: bad data row: {exc}") from None
    if idx.shape[0] != n_rows:
        raise GridFormatError(f"{path}: expected {n_rows} rows, found {idx.shape[0]}")
    expect_i = np.repeat(np.arange(spec.n_phi), spec.n_u)
    expect_j = np.tile(np.arange(spec.n_u), spec.n_phi)
    if not (np.array_equal(idx[:, 0], expect_i) and np.array_equal(idx[:, 1], expect_j)):
        raise GridFormatError(f"{path}: rows are not in row-major (phi_index, u_index) order")

    grid = DetectorGrid(
        spec=spec,
        counts=vals.reshape(spec.n_phi, spec.n_u),
        cfg=cfg,
        pat=pat,
        proc=proc,
        seed=fields["seed"],
        elapsed_sim_time=float(fields.get("elapsed_sim_time", 0.0)),
        tallies={k: fields["tallies"][k] for k in TALLY_KEYS},
        b_only_by_phi=np.asarray(fields["b_only_by_phi"], dtype=dtype),
    )
    if grid.fingerprint != fields["fingerprint"]:
        raise GridFormatError(f"{path}: fingerprint does not match the embedded configuration")
    return grid


def write_profile(path, profile):
    """Visibility profile as plain CSV (one row per azimuth bin)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("phi,contrast,sigma,phase,n_counts\n")
        for row in zip(profile.phi_bins, profile.v_est, profile.v_sigma, profile.phase, profile.n_counts):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def format_table(columns, rows):
    """CSV text for a list of dict rows."""
    lines = [",".join(columns)]
    lines += [",".join(_cell(row[c]) for c in columns) for row in rows]
    return "\n".join(lines) + "\n"


def _cell(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return "INFINITE" if math.isinf(x) and x > 0 else repr(x)
    return str(x)


def jsonable(obj):
    """Replace non-finite floats: +inf becomes ``"INFINITE"``, NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "INFINITE" if x > 0 else "-INFINITE"
        return x
    return obj


def build_report(kind, timestamp=None, **sections):
    """Assemble a report dict. Only ``generated_at`` varies between identical runs."""
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    doc = {"report": kind, "tool": "boundspeed", "version": __version__, "generated_at": timestamp}
    doc.update(sections)
    return jsonable(doc)


def dump_report(doc):
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, doc):
    with open(path, "w", newline="\n") as fh:
        fh.write(dump_report(doc))


def grid_summary(grid):
    return {
        "fingerprint": grid.fingerprint,
        "seed": grid.seed,
        "omega": grid.cfg.omega,
        "elapsed_sim_time": grid.elapsed_sim_time,
        "tallies": dict(grid.tallies),
        "expected": grid.expected,
    }
