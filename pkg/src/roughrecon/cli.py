"""Command-line interface: ``roughrecon <subcommand> [options]``.

Exit codes are 0 on success, 1 on a runtime failure (partial artifacts are
kept) and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    ConfigError,
    MeasurementSet,
    ScenarioConfig,
    parse_quantity,
    run_scenario,
)
from .forward import scattered_field, solve_forward, wavenumber
from .inverse import segment_width
from .plotting import plot_report
from .scenarios import PRESETS, preset
from .surface import RandomSurfaceParams, generate_gaussian_surface, sample_surface

logger = logging.getLogger("roughrecon")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or configuration; maps to exit code 2."""


def _load_json(path):
    if path is None:
        raise UsageError("--config is required for this subcommand")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: invalid JSON ({exc})") from None


def _check_writable(paths, force):
    for p in paths:
        if p.exists() and not force:
            raise UsageError(f"{p} exists; pass --force to overwrite")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# gen-surface
# --------------------------------------------------------------------------


def _surface_stats(surface, interior):
    x, h = surface.x, surface.heights
    keep = np.abs(x) <= interior
    hi = h[keep]
    dx = x[1] - x[0]
    n = hi.size
    spec = np.fft.rfft(hi, 2 * n)
    acf = np.fft.irfft(np.abs(spec) ** 2)[:n] / np.arange(n, 0, -1)
    below = np.flatnonzero(acf < math.exp(-1) * acf[0]) if acf[0] > 0 else np.array([], int)
    return {
        "std": float(np.sqrt(np.mean(hi**2))),
        "mean": float(np.mean(hi)),
        "corr_length_estimate": float(below[0] * dx) if below.size else None,
        "interior_half_width": float(interior),
        "grid_count": int(x.size - 1),
    }


def cmd_gen_surface(args):
    data = _load_json(args.config)
    s = data.get("surface", data)
    try:
        L = parse_quantity(data.get("domain_length", s.get("domain_length", 16.0)))
        params = RandomSurfaceParams(
            corr_length=parse_quantity(s["corr_length"]),
            height_std=parse_quantity(s["height_std"]),
            domain_length=L,
            grid_count=int(s.get("grid_count", 4096)),
            taper_width=parse_quantity(s.get("taper_width", 0.25)),
            seed=int(args.seed if args.seed is not None else s.get("seed", 0)),
        )
    except KeyError as exc:
        raise UsageError(f"surface config missing {exc}") from None
    except ValueError as exc:
        raise UsageError(f"surface config: {exc}") from None
    out = _out_dir(args)
    csv_path, stats_path = out / "surface.csv", out / "surface_stats.json"
    _check_writable([csv_path, stats_path], args.force)
    surface = generate_gaussian_surface(params)
    surface.to_csv(csv_path)
    stats = _surface_stats(surface, L / 2 - 2 * params.taper_width - 1.0)
    stats.update({"seed": params.seed, "corr_length": params.corr_length, "height_std": params.height_std, "domain_length": L})
    _write_json(stats_path, stats)
    logger.info("wrote %s and %s", csv_path, stats_path)
    return EXIT_OK


# --------------------------------------------------------------------------
# forward
# --------------------------------------------------------------------------


def cmd_forward(args):
    data = _load_json(args.config)
    scen = dict(data)
    freq_text = scen.pop("frequency", None)
    segments = scen.pop("segments", None)
    if freq_text is None:
        raise UsageError("forward config needs a 'frequency'")
    scen.setdefault("schedule", {"start": freq_text, "step": freq_text, "stop": freq_text})
    if args.seed is not None and scen.get("surface", {}).get("kind") == "gaussian":
        scen["surface"] = dict(scen["surface"], seed=args.seed)
    try:
        f = parse_quantity(freq_text)
        if not f > 0:
            raise ValueError("frequency must be positive")
        cfg = ScenarioConfig.from_dict(scen)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    L = cfg.domain_length
    k1, k2 = wavenumber(cfg.upper, f), wavenumber(cfg.lower, f)
    if segments is not None:
        if not isinstance(segments, int) or segments < 2:
            raise UsageError(f"'segments' must be an integer >= 2, got {segments!r}")
        width = L / segments
    else:
        width = segment_width(k2, cfg.inverse.points_per_wavelength) / cfg.mesh_factor
    if width >= L:
        raise UsageError("mesh would have fewer than two segments")
    out = _out_dir(args)
    paths = [out / "scattered.csv", out / "forward.json", out / "surface_field.csv"]
    _check_writable(paths, args.force)

    surf = sample_surface(cfg.build_reference(), width, L)
    if surf.count < 2:
        raise UsageError("mesh would have fewer than two segments")
    receivers = cfg.build_receivers()
    sol = solve_forward(surf, k1, k2, cfg.wave, f)
    try:
        u_sca = scattered_field(receivers, sol, k1)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write_field_csv(paths[0], receivers.x, u_sca)
    with open(paths[2], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "s", "u_re", "u_im", "v_re", "v_im"])
        for row in zip(surf.x, surf.heights, sol.u.real, sol.u.imag, sol.v.real, sol.v.imag):
            wr.writerow([repr(float(v)) for v in row])
    _write_json(
        paths[1],
        {
            "frequency_hz": f,
            "theta_inc": cfg.wave.theta,
            "taper": cfg.wave.taper,
            "upper": cfg.upper.to_dict(),
            "lower": cfg.lower.to_dict(),
            "k1": [k1.real, k1.imag],
            "k2": [k2.real, k2.imag],
            "n_segments": surf.count,
            "segment_width": surf.width,
            "receiver_height": receivers.height,
            "n_receivers": receivers.count,
            "relative_residual": sol.residual,
        },
    )
    logger.info("wrote %s", ", ".join(str(p) for p in paths))
    return EXIT_OK


def _write_field_csv(path, x, u):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "re", "im"])
        for xi, ui in zip(x, u):
            wr.writerow([repr(float(xi)), repr(float(ui.real)), repr(float(ui.imag))])


# --------------------------------------------------------------------------
# reconstruct / experiment
# --------------------------------------------------------------------------


def _scenario_from_args(args, allow_preset):
    if allow_preset and args.preset is not None:
        if args.config is not None:
            raise UsageError("give either --config or --preset, not both")
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(sorted(PRESETS))}")
        data = preset(args.preset)
    else:
        data = _load_json(args.config)
    cfg = ScenarioConfig.from_dict(data)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _run_and_write(cfg, args, measurements=None):
    out = Path(args.out)
    if (out / "report.json").exists() and not args.force:
        raise UsageError(f"{out / 'report.json'} exists; pass --force to overwrite")
    report = run_scenario(cfg, measurements)
    report.write(out, force=True)
    logger.info("wrote report to %s", out)
    bad = [i for i, p in enumerate(report.points) if p.error or p.failed]
    if bad:
        for i in bad:
            p = report.points[i]
            print(f"sweep point {i} failed: {p.error or p.failed}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_reconstruct(args):
    cfg = _scenario_from_args(args, allow_preset=False)
    if cfg.sweep_axis != "none":
        raise UsageError("reconstruct runs a single configuration; use 'experiment' for sweeps")
    measurements = None
    if args.measurements is not None:
        p = Path(args.measurements)
        if not p.is_file():
            raise UsageError(f"measurement file not found: {p}")
        try:
            measurements = MeasurementSet.load(p)
        except (KeyError, ValueError) as exc:
            raise UsageError(f"{p}: malformed measurement file ({exc})") from None
    return _run_and_write(cfg, args, measurements)


def cmd_experiment(args):
    return _run_and_write(_scenario_from_args(args, allow_preset=True), args)


# --------------------------------------------------------------------------
# plot
# --------------------------------------------------------------------------


def cmd_plot(args):
    report = Path(args.report) if args.report is not None else Path(args.out)
    if not (report / "report.json").is_file():
        raise UsageError(f"no report.json in {report}")
    out = Path(args.out) if args.report is not None else report
    try:
        json.loads((report / "report.json").read_text())
        written = plot_report(report, out)
    except (ValueError, IndexError, KeyError) as exc:
        print(f"error: malformed report in {report}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    logger.info("wrote %d SVG file(s) to %s", len(written), out)
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def _global_flags(suppress):
    # subcommands repeat the global flags without defaults so that values
    # given before the subcommand are not reset
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file", **kw)
    common.add_argument("--out", help="output directory (default: current directory)", **({"default": "."} | kw))
    common.add_argument("--seed", type=_u64, help="override the surface and noise seeds", **kw)
    common.add_argument("--force", action="store_true", help="overwrite existing outputs", **kw)
    common.add_argument("--quiet", action="store_true", help="only report errors", **kw)
    return common


def build_parser():
    parser = argparse.ArgumentParser(prog="roughrecon", description="Reconstruct rough interfaces from multi-frequency scattered fields.", parents=[_global_flags(False)])
    common = _global_flags(True)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-surface", parents=[common], help="generate a Gaussian random surface")
    sub.add_parser("forward", parents=[common], help="scattered field of a surface at one frequency")
    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct one configuration")
    p.add_argument("--measurements", default=None, help="MeasurementSet JSON to invert instead of synthesizing data")
    p = sub.add_parser("experiment", parents=[common], help="run a scenario, including sweeps")
    p.add_argument("--preset", default=None, help=f"built-in scenario: {', '.join(sorted(PRESETS))}")
    p = sub.add_parser("plot", parents=[common], help="render SVG plots of a report directory")
    p.add_argument("--report", default=None, help="report directory (default: --out)")
    return parser


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


COMMANDS = {
    "gen-surface": cmd_gen_surface,
    "forward": cmd_forward,
    "reconstruct": cmd_reconstruct,
    "experiment": cmd_experiment,
    "plot": cmd_plot,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # report, do not dump a traceback on users
        logger.debug("unhandled error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
