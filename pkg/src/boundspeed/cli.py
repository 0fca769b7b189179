"""Command line interface: ``boundspeed <subcommand> ...``.

Exit status is 0 on success, 2 for configuration errors, 3 when estimation
fails and 4 for file problems. Failures also print a one-line JSON object with
the error category to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import __version__
from .analysis import estimate_v, expected_pattern
from .apparatus import predict_delta, predict_shift_x, pure_sector
from .config import parse_config, parse_quantity
from .engine import THREADS_ENV, config_fingerprint, run
from .errors import BoundspeedError, ConfigError, EstimationError, GridFormatError
from .scenarios import ClassicalityScenario, SignalingScenario, classicality_check, signaling_check
from .serialize import (
    build_report,
    dump_report,
    format_table,
    grid_summary,
    read_grid,
    write_grid,
    write_profile,
    write_report,
)

ANGSTROM = 1e-10
EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATION, EXIT_IO = 0, 2, 3, 4

# sweepable parameter -> (field, dimension)
SWEEP_PARAMS = {
    "v": ("v_response", "speed"),
    "v_response": ("v_response", "speed"),
    "a2": ("a2", "length"),
    "R": ("R", "length"),
    "alpha": ("alpha", "angle"),
    "beta": ("beta", "angle"),
    "omega_slow": ("omega_slow", "angular_speed"),
    "omega_fast": ("omega_fast", "angular_speed"),
}


def _value(dimension, allow_infinite=False):
    """argparse type: a number in SI units, or a number with a unit suffix."""

    def convert(text):
        try:
            return float(text) if not allow_infinite or text.lower() not in ("inf", "infinite") else math.inf
        except ValueError:
            pass
        try:
            return parse_quantity(text, dimension, key="value", allow_infinite=allow_infinite)
        except ConfigError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return convert


def _emit(doc, out):
    if out:
        write_report(out, doc)
    else:
        sys.stdout.write(dump_report(doc))


def _omegas(rc):
    r = rc.run
    if r.omega_slow is None or r.omega_fast is None:
        return None
    return r.omega_slow, r.omega_fast


def _predictions(cfg, omega_slow, omega_fast):
    slow, fast = cfg.with_omega(omega_slow), cfg.with_omega(omega_fast)
    d_s, d_f = predict_delta(slow), predict_delta(fast)
    x = predict_shift_x(slow, fast)
    return {
        "omega_slow": omega_slow,
        "omega_fast": omega_fast,
        "delta_slow": d_s,
        "delta_fast": d_f,
        "delta_diff": d_f - d_s,
        "x": x,
        "x_angstrom": x / ANGSTROM,
    }


def cmd_predict(args):
    rc = parse_config(args.config)
    cfg = rc.apparatus
    sector = pure_sector(cfg)
    doc = {
        "gamma": cfg.gamma,
        "retardation": cfg.retardation,
        "flight_time": cfg.flight_time,
        "omega": cfg.omega,
        "delta": predict_delta(cfg),
        "pure_sector": {"start": sector.start, "width": sector.width, "displacement": sector.displacement},
    }
    lines = [
        f"gamma = {cfg.gamma:.6g} rad",
        f"delta = {doc['delta']:.6g} rad at omega = {cfg.omega:.6g} rad/s",
    ]
    omegas = _omegas(rc)
    if omegas is not None:
        pair = _predictions(cfg, *omegas)
        doc["pair"] = pair
        lines += [
            f"delta_slow = {pair['delta_slow']:.6g} rad at omega = {omegas[0]:.6g} rad/s",
            f"delta_fast = {pair['delta_fast']:.6g} rad at omega = {omegas[1]:.6g} rad/s",
            f"delta_diff = {pair['delta_diff']:.6g} rad",
            f"x = {pair['x_angstrom']:.1f} A",
        ]
    report = build_report(
        "predict",
        fingerprint=config_fingerprint(cfg, rc.pattern, rc.emission, exclude=("omega",)),
        prediction=doc,
    )
    if args.out:
        write_report(args.out, report)
    print("\n".join(lines))
    return EXIT_OK


def _apparatus_for(rc, speed):
    return rc.apparatus if speed == "config" else rc.at_speed(speed)


def cmd_run(args):
    rc = parse_config(args.config)
    cfg = _apparatus_for(rc, args.speed)
    duration = args.duration if args.duration is not None else rc.run.duration
    if duration is None:
        raise ConfigError("no duration: pass --duration or set [run] duration", key="duration")
    seed = args.seed if args.seed is not None else rc.run.seed
    workers = args.workers if args.workers is not None else rc.run.workers
    grid = run(
        cfg,
        rc.pattern,
        rc.emission,
        duration,
        seed,
        rc.run.grid,
        workers=workers,
        n_chunks=rc.run.n_chunks,
        event_log=args.events,
    )
    write_grid(args.out, grid)
    report = build_report("run", run=grid_summary(grid), grid_file=str(args.out))
    _emit(report, args.report)
    return EXIT_OK


def cmd_oracle(args):
    rc = parse_config(args.config)
    cfg = _apparatus_for(rc, args.speed)
    duration = args.duration if args.duration is not None else rc.run.duration
    if duration is None:
        raise ConfigError("no duration: pass --duration or set [run] duration", key="duration")
    spec = rc.run.grid
    if args.n_phi is not None:
        spec = type(spec)(n_phi=args.n_phi, n_u=spec.n_u, phi_range=spec.phi_range, u_range=spec.u_range)
    grid = expected_pattern(cfg, rc.pattern, spec, proc=rc.emission, duration=duration)
    write_grid(args.out, grid)
    report = build_report("oracle", run=grid_summary(grid), grid_file=str(args.out))
    _emit(report, args.report)
    return EXIT_OK


def _analysis_kwargs(args):
    opts = parse_config(args.config).run.analysis if args.config else None
    pick = lambda flag, attr, default: (  # noqa: E731
        flag if flag is not None else (getattr(opts, attr) if opts else default)
    )
    return {
        "n_min": pick(args.n_min, "n_min", 100),
        "window_sigma": pick(args.window_sigma, "window_sigma", 2.0),
        "edge_fraction": pick(args.edge_fraction, "edge_fraction", 0.2),
        "n_boot": pick(args.bootstrap, "bootstrap", 200),
        "seed": pick(args.bootstrap_seed, "bootstrap_seed", 0),
    }


def estimate_report(slow, fast, est):
    return build_report(
        "estimate",
        fingerprint=config_fingerprint(slow.cfg, slow.pat, slow.proc, exclude=("omega",)),
        seed={"slow": slow.seed, "fast": fast.seed},
        tallies={"slow": dict(slow.tallies), "fast": dict(fast.tallies)},
        delta_slow=est.delta_slow,
        delta_fast=est.delta_fast,
        delta_diff=est.delta_diff,
        delta_sigma=est.delta_sigma,
        v_hat=est.v_hat,
        v_sigma=est.v_sigma,
        v_infinite=est.v_infinite,
        v_lower_bound=est.v_lower_bound,
        x_hat=est.x_hat,
        x_hat_angstrom=est.x_hat / ANGSTROM,
        estimate=est.as_dict(),
        runs={"slow": grid_summary(slow), "fast": grid_summary(fast)},
    )


def cmd_estimate(args):
    slow, fast = read_grid(args.slow), read_grid(args.fast)
    profiles = []
    est = estimate_v(slow, fast, profiles=profiles, **_analysis_kwargs(args))
    if args.profile_out:
        write_profile(f"{args.profile_out}_slow.csv", profiles[0])
        write_profile(f"{args.profile_out}_fast.csv", profiles[1])
    write_report(args.out, estimate_report(slow, fast, est))
    if est.v_infinite:
        print(f"v = INFINITE (lower bound {est.v_lower_bound:.6g} m/s)")
    else:
        print(f"v_hat = {est.v_hat:.6g} +/- {est.v_sigma:.3g} m/s")
    print(f"delta_diff = {est.delta_diff:.6g} +/- {est.delta_sigma:.3g} rad")
    print(f"x_hat = {est.x_hat / ANGSTROM:.1f} A")
    return EXIT_OK


def cmd_scenario(args):
    rc = parse_config(args.config)
    cfg = rc.apparatus
    if args.which == "signaling":
        wait = args.observer_wait if args.observer_wait is not None else 2.0 * cfg.flight_time
        sc = SignalingScenario(cfg, wait, rc.pattern.dark_fringe)
        verdict = signaling_check(sc)
        inputs = {"observer_wait": wait, "s_point_u": sc.s_point_u}
    else:
        gap = args.epsilon_gap if args.epsilon_gap is not None else 2.0 * cfg.flight_time
        sc = ClassicalityScenario(cfg, gap)
        verdict = classicality_check(sc)
        inputs = {"epsilon_gap": gap}
    report = build_report(
        "scenario",
        fingerprint=config_fingerprint(cfg, rc.pattern, rc.emission),
        scenario=args.which,
        inputs=inputs,
        verdict=verdict.as_dict(),
    )
    _emit(report, args.out)
    return EXIT_OK


def cmd_sweep(args):
    rc = parse_config(args.config)
    field_name, _ = SWEEP_PARAMS[args.param]
    omegas = _omegas(rc)
    if omegas is None:
        raise ConfigError("sweep needs [run] omega_slow and omega_fast")
    duration = rc.run.duration or 1.0
    spec = rc.run.grid
    if args.n_phi is not None:
        spec = type(spec)(n_phi=args.n_phi, n_u=spec.n_u, phi_range=spec.phi_range, u_range=spec.u_range)
    columns = ["param", "value", "gamma", "delta_slow", "delta_fast", "delta_diff", "x", "x_angstrom"]
    if args.oracle:
        columns += ["delta_diff_hat", "v_hat", "x_hat"]
    rows = []
    for value in args.values:
        cfg, (w_s, w_f) = rc.apparatus, omegas
        if field_name == "omega_slow":
            w_s = value
        elif field_name == "omega_fast":
            w_f = value
        else:
            cfg = cfg.replace(**{field_name: value})
        row = {"param": args.param, "value": value, "gamma": cfg.gamma}
        row.update(_predictions(cfg, w_s, w_f))
        if args.oracle:
            slow = expected_pattern(cfg.with_omega(w_s), rc.pattern, spec, proc=rc.emission, duration=duration)
            fast = expected_pattern(cfg.with_omega(w_f), rc.pattern, spec, proc=rc.emission, duration=duration)
            est = estimate_v(slow, fast, n_boot=args.bootstrap, seed=rc.run.analysis.bootstrap_seed)
            row.update(delta_diff_hat=est.delta_diff, v_hat=est.v_hat, x_hat=est.x_hat)
        rows.append(row)
    text = format_table(columns, rows)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="boundspeed",
        description="Simulate the rotating-wheel double-pinhole experiment and estimate the response speed.",
        epilog=f"Default worker threads come from ${THREADS_ENV}.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("predict", help="closed-form boundary shift, sector angle and x")
    sp.add_argument("config")
    sp.add_argument("--out", help="also write a JSON report")
    sp.set_defaults(func=cmd_predict)

    speeds = ("config", "slow", "fast")
    time = _value("time")

    sp = sub.add_parser("run", help="Monte Carlo detector grid")
    sp.add_argument("config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--duration", type=time, help="simulated time, e.g. 630 or '630 s'")
    sp.add_argument("--out", required=True, help="grid CSV to write")
    sp.add_argument("--speed", choices=speeds, default="config", help="which omega from the config to use")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--events", help="write a per-particle event log CSV")
    sp.add_argument("--report", help="write run statistics here instead of stdout")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("oracle", help="noise-free expected grid")
    sp.add_argument("config")
    sp.add_argument("--out", required=True)
    sp.add_argument("--speed", choices=speeds, default="config")
    sp.add_argument("--duration", type=time)
    sp.add_argument("--n-phi", type=int, help="override the number of azimuth bins")
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("estimate", help="response speed from a slow and a fast grid")
    sp.add_argument("slow")
    sp.add_argument("fast")
    sp.add_argument("--out", required=True, help="JSON report")
    sp.add_argument("--config", help="take [analysis] options from this file")
    sp.add_argument("--profile-out", help="prefix for visibility profile CSVs")
    sp.add_argument("--n-min", type=int)
    sp.add_argument("--window-sigma", type=float)
    sp.add_argument("--edge-fraction", type=float)
    sp.add_argument("--bootstrap", type=int)
    sp.add_argument("--bootstrap-seed", type=int)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("scenario", help="evaluate a thought experiment")
    sp.add_argument("which", choices=("signaling", "classicality"))
    sp.add_argument("config")
    sp.add_argument("--observer-wait", type=time, help="signaling: wait after A closes")
    sp.add_argument("--epsilon-gap", type=time, help="classicality: gap between emissions")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scenario)

    sp = sub.add_parser("sweep", help="predictions (and oracle estimates) over a parameter")
    sp.add_argument("config")
    sp.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    sp.add_argument("--values", required=True, nargs="+", help="SI numbers or values with units, 'inf' for v")
    sp.add_argument("--oracle", action="store_true", help="also estimate from oracle grids")
    sp.add_argument("--n-phi", type=int)
    sp.add_argument("--bootstrap", type=int, default=20)
    sp.add_argument("--out", help="CSV table (stdout if omitted)")
    sp.set_defaults(func=cmd_sweep)
    return p


def _fail(category, exc, code):
    sys.stderr.write(json.dumps({"error": category, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "sweep":
        dim = SWEEP_PARAMS[args.param][1]
        conv = _value(dim, allow_infinite=args.param in ("v", "v_response"))
        try:
            args.values = [conv(v) for v in args.values]
        except argparse.ArgumentTypeError as exc:
            return _fail("config", exc, EXIT_CONFIG)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc.category, exc, EXIT_CONFIG)
    except EstimationError as exc:
        return _fail(exc.category, exc, EXIT_ESTIMATION)
    except (GridFormatError, OSError) as exc:
        return _fail("io", exc, EXIT_IO)
    except BoundspeedError as exc:
        return _fail(exc.category, exc, 1)

