"""Command-line driver.

    vk micro  --config run.cfg [--allow-stiff] [--out DIR]
    vk macro  --config run.cfg [--out DIR]
    vk coeffs --kappa 8
    vk analyze DIR [--json] [--window 0.1] [--bins N]

Exit codes: 0 success, 2 configuration/usage error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, snapshots
from ._util import configure_threads
from .coefficients import ClosureCoefficients
from .config import parse_config_file, with_overrides
from .errors import ConfigError, NumericalAbort, SnapshotError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _json_dump(obj, stream) -> None:
    json.dump(obj, stream, indent=2, sort_keys=True)
    stream.write("\n")


def _write_run_artifacts(out_dir: Path, series, summary: dict) -> None:
    with open(out_dir / "series.json", "w", encoding="utf-8") as f:
        _json_dump(series.to_dict(), f)
    with open(out_dir / "summary.json", "w", encoding="utf-8") as f:
        _json_dump(summary, f)


def _cmd_micro(args) -> int:
    from .microsim import run_micro

    cfg = parse_config_file(args.config, allow_stiff=args.allow_stiff)
    if cfg.mode != "micro":
        raise ConfigError(f"'vk micro' needs mode = micro, config says "
                          f"{cfg.mode!r}")
    cfg = with_overrides(cfg, out_dir=args.out)
    out_dir = Path(cfg.output.dir)
    sink = snapshots.FileSink(out_dir)
    result = run_micro(cfg.micro, cfg.micro_init, sink,
                       snapshot_every=cfg.output.snapshot_every,
                       diag_every=cfg.output.diag_every)
    summary = {
        "mode": "micro",
        "n_steps": result.n_steps,
        "n_particles": cfg.micro_init.n,
        "final_polar_order": result.series.polar_order[-1],
        "final_mean_omega": result.series.mean_omega[-1],
        "snapshots": len(sink.paths),
    }
    _write_run_artifacts(out_dir, result.series, summary)
    print(f"micro run: {result.n_steps} steps, "
          f"final polar order {summary['final_polar_order']:.4f}, "
          f"output in {out_dir}")
    return EXIT_OK


def _cmd_macro(args) -> int:
    from .macrosim import run_macro

    cfg = parse_config_file(args.config)
    if cfg.mode != "macro":
        raise ConfigError(f"'vk macro' needs mode = macro, config says "
                          f"{cfg.mode!r}")
    cfg = with_overrides(cfg, out_dir=args.out)
    out_dir = Path(cfg.output.dir)
    sink = snapshots.FileSink(out_dir)
    result = run_macro(cfg.macro, cfg.macro_init, sink,
                       snapshot_every=cfg.output.snapshot_every,
                       diag_every=cfg.output.diag_every)
    summary = {
        "mode": "macro",
        "n_steps": result.n_steps,
        "grid": [cfg.macro.nx, cfg.macro.ny],
        "mass_drift": result.mass_drift,
        "momentum_drift": result.momentum_drift,
        "max_direction_error": result.max_direction_error,
        "final_polar_order": result.series.polar_order[-1],
        "snapshots": len(sink.paths),
    }
    _write_run_artifacts(out_dir, result.series, summary)
    print(f"macro run: {result.n_steps} steps, mass drift "
          f"{result.mass_drift:.2e}, output in {out_dir}")
    return EXIT_OK


def _cmd_coeffs(args) -> int:
    cc = ClosureCoefficients.from_kappa(args.kappa)
    _json_dump({
        "kappa": cc.kappa, "c1": cc.c1, "c2": cc.c2,
        "K1": cc.K1, "K2": cc.K2, "quad_error": cc.quad_error,
    }, sys.stdout)
    return EXIT_OK


def _analysis_bins(n_particles: int) -> int:
    # target ~15 particles per bin so the shot-noise floor stays small
    return max(4, int(np.sqrt(n_particles / 15.0)))


def _cmd_analyze(args) -> int:
    paths = snapshots.scan_snapshots(args.directory)
    if not paths:
        raise ConfigError(f"no snapshots found in {args.directory}")
    snaps = [snapshots.read_snapshot(p) for p in paths]
    kinds = {type(s).__name__ for s in snaps}
    if len(kinds) != 1:
        raise ConfigError(f"mixed snapshot kinds in {args.directory}: "
                          f"{sorted(kinds)}")
    is_micro = isinstance(snaps[0], snapshots.MicroSnapshot)
    L = snaps[0].L
    if is_micro:
        nbins = args.bins or _analysis_bins(snaps[0].n)
        states = [(s.t, s.to_ensemble()) for s in snaps]
    else:
        nbins = None
        states = [(s.t, s.to_state()) for s in snaps]

    times, polar, ang, mom, dv = [], [], [], [], []
    for t, st in states:
        times.append(t)
        polar.append(diagnostics.polar_order(st))
        ang.append(diagnostics.global_heading(st))
        mom.append(diagnostics.mean_frequency(st))
        dv.append(diagnostics.density_variance(st, L=L, nbins=nbins)
                  if is_micro else diagnostics.density_variance(st))
    series = diagnostics.OrderTimeSeries(
        t=np.asarray(times), polar_order=np.asarray(polar),
        global_angle=np.unwrap(np.asarray(ang)), mean_omega=np.asarray(mom),
        density_variance=np.asarray(dv))
    result = diagnostics.classify_pattern(
        series, states, L=L, nbins=nbins, window_fraction=args.window)

    if args.json:
        payload = {
            "label": result.label,
            "metrics": result.metrics,
            "n_snapshots": len(snaps),
            "series": series.to_dict(),
        }
        if result.period is not None:
            payload["period"] = result.period.period
            payload["period_confidence"] = result.period.confidence
        _json_dump(payload, sys.stdout)
    else:
        print(f"label: {result.label}")
        for key in sorted(result.metrics):
            v = result.metrics[key]
            print(f"  {key}: {v:.6g}" if isinstance(v, float)
                  else f"  {key}: {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vk",
        description="Coupled alignment/synchronization model toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_micro = sub.add_parser("micro", help="run the particle simulation")
    p_micro.add_argument("--config", required=True)
    p_micro.add_argument("--allow-stiff", action="store_true",
                         help="accept dt*max(k) beyond the stability guard")
    p_micro.add_argument("--out", help="override [output] dir")
    p_micro.set_defaults(func=_cmd_micro)

    p_macro = sub.add_parser("macro", help="run the hydrodynamic solver")
    p_macro.add_argument("--config", required=True)
    p_macro.add_argument("--out", help="override [output] dir")
    p_macro.set_defaults(func=_cmd_macro)

    p_coeffs = sub.add_parser("coeffs",
                              help="print closure coefficients as JSON")
    p_coeffs.add_argument("--kappa", type=float, required=True)
    p_coeffs.set_defaults(func=_cmd_coeffs)

    p_an = sub.add_parser("analyze", help="classify a snapshot directory")
    p_an.add_argument("directory")
    p_an.add_argument("--json", action="store_true")
    p_an.add_argument("--window", type=float, default=0.1,
                      help="trailing fraction of the run to analyze")
    p_an.add_argument("--bins", type=int, default=0,
                      help="override the particle binning resolution")
    p_an.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    configure_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SnapshotError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
