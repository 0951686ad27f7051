"""Command-line front end: config file in, CSV + JSON out.

Subcommands mirror the config modes (run | scan | friction | hist); the
subcommand must match the mode declared in the config.  Scans and
friction maps execute row by row purely for progress reporting; node
seeds hash absolute axis values, so the output is identical to a
monolithic sweep.

Exit codes: 0 success, 2 configuration problem, 3 output refused
(exists without --overwrite), 4 simulation failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, output
from .config import ConfigError, RunConfig, config_sections, parse_config
from .dynamics import IntegrationError, NoiseModelError
from .ensemble import EnsembleError, position_histogram, run_ensemble
from .friction import ConvergenceError, FrictionMap, friction_map
from .scan import GridAxis, GridSpec, ScanResult, run_scan

EXIT_CONFIG = 2
EXIT_OUTPUT = 3
EXIT_RUNTIME = 4


def _log(err, msg):
    print(msg, file=err, flush=True)


def _eta(t0, done, total):
    if done == 0:
        return "?"
    left = (time.monotonic() - t0) / done * (total - done)
    return f"{left:.0f}s"


def _prepare_out(cfg: RunConfig, names):
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / n for n in names]
    if not cfg.overwrite:
        for p in paths:
            if p.exists():
                raise FileExistsError(
                    f"{p} exists; pass --overwrite to replace it")
    return paths


def _sidecar(cfg: RunConfig, wall, summary):
    return {
        "mode": cfg.mode,
        "version": __version__,
        "seed": cfg.ensemble.seed if cfg.ensemble is not None else None,
        "wall_time_s": wall,
        "config": config_sections(cfg),
        "summary": summary,
    }


def _do_run(cfg, threads, err):
    csv_path, json_path = _prepare_out(cfg, ["timeseries.csv",
                                             "summary.json"])
    _log(err, f"running ensemble ({cfg.ensemble.n_traj} trajectories, "
              f"t_final {cfg.ensemble.t_final:g})")
    t0 = time.monotonic()
    st = run_ensemble(cfg.params, cfg.initial, cfg.ensemble, threads=threads)
    wall = time.monotonic() - t0
    output.write_timeseries(csv_path, st)
    output.write_json(json_path, _sidecar(cfg, wall, {
        "steady_intensity": st.steady_intensity,
        "steady_intensity_se": st.steady_intensity_se,
        "steady_e_kin": st.steady_e_kin,
        "steady_e_kin_se": st.steady_e_kin_se,
        "steady_e_kin_kappa": st.steady_e_kin / cfg.params.kappa,
        "steady_bunching": st.steady_bunching,
        "steady_bunching_se": st.steady_bunching_se,
        "saturation": st.saturation,
        "cooling_time": st.cooling_time,
        "stationarity": st.stationarity,
        "steady_window": st.steady_window,
        "n_traj": st.n_traj,
        "n_excluded": st.n_excluded,
    }))
    _log(err, f"done in {wall:.1f}s")
    return [csv_path, json_path]


def _do_scan(cfg, threads, err):
    csv_path, json_path = _prepare_out(cfg, ["scan.csv", "summary.json"])
    g = cfg.grid
    v1s = g.axis1.values()
    n1 = len(v1s)
    t0 = time.monotonic()
    rows = []
    for i, v1 in enumerate(v1s):
        sub = GridSpec(GridAxis(g.axis1.name, v1, v1, g.axis1.step), g.axis2)
        rows.append(run_scan(sub, cfg.params, cfg.initial, cfg.ensemble,
                             threads=threads))
        _log(err, f"row {i + 1}/{n1} done, eta {_eta(t0, i + 1, n1)}")
    wall = time.monotonic() - t0

    r = ScanResult(
        axis1_name=g.axis1.name, axis2_name=g.axis2.name,
        axis1_values=v1s, axis2_values=g.axis2.values(),
        intensity=np.vstack([x.intensity for x in rows]),
        e_kin=np.vstack([x.e_kin for x in rows]),
        e_kin_kappa=np.vstack([x.e_kin_kappa for x in rows]),
        bunching=np.vstack([x.bunching for x in rows]),
        cooling_time=np.vstack([x.cooling_time for x in rows]),
        saturation=np.vstack([x.saturation for x in rows]),
        n_excluded=np.vstack([x.n_excluded for x in rows]),
        failures=[f for x in rows for f in x.failures])
    output.write_scan(csv_path, r)
    output.write_json(json_path, _sidecar(cfg, wall, {
        "shape": list(r.e_kin.shape),
        "n_nodes": int(r.e_kin.size),
        "n_failed": len(r.failures),
        "failures": r.failures,
    }))
    _log(err, f"done in {wall:.1f}s ({len(r.failures)} failed nodes)")
    return [csv_path, json_path]


def _do_friction(cfg, threads, err):
    csv_path, json_path = _prepare_out(cfg, ["friction_map.csv",
                                             "summary.json"])
    g = cfg.grid
    das = g.axis1.values()
    dcs = g.axis2.values()
    t0 = time.monotonic()
    parts = []
    for i, da in enumerate(das):
        parts.append(friction_map([da], dcs, cfg.params, cfg.drag,
                                  threads=threads))
        _log(err, f"row {i + 1}/{len(das)} done, "
                  f"eta {_eta(t0, i + 1, len(das))}")
    wall = time.monotonic() - t0

    fm = FrictionMap(delta_a=das, delta_c=dcs,
                     f1=np.vstack([x.f1 for x in parts]),
                     converged=np.vstack([x.converged for x in parts]))
    output.write_friction_map(csv_path, fm)
    output.write_json(json_path, _sidecar(cfg, wall, {
        "shape": list(fm.f1.shape),
        "n_nodes": int(fm.f1.size),
        "n_converged": int(fm.converged.sum()),
        "n_cooling": int((fm.f1[np.isfinite(fm.f1)] > 0).sum()),
    }))
    _log(err, f"done in {wall:.1f}s")
    return [csv_path, json_path]


def _do_hist(cfg, threads, err):
    csv_path, json_path = _prepare_out(cfg, ["histogram.csv",
                                             "summary.json"])
    _log(err, f"running ensemble to t = {cfg.t_snapshot:g} "
              f"({cfg.ensemble.n_traj} trajectories)")
    t0 = time.monotonic()
    h = position_histogram(cfg.params, cfg.initial, cfg.ensemble,
                           t_snapshot=cfg.t_snapshot, n_bins=cfg.n_bins,
                           threads=threads)
    wall = time.monotonic() - t0
    output.write_histogram(csv_path, h)
    output.write_json(json_path, _sidecar(cfg, wall, {
        "t_snapshot": h.t_snapshot,
        "n_bins": cfg.n_bins,
        "n_traj": h.n_traj,
        "n_excluded": h.n_excluded,
        "mean_alpha_plus": h.mean_alpha_plus,
        "mean_alpha_minus": h.mean_alpha_minus,
    }))
    _log(err, f"done in {wall:.1f}s")
    return [csv_path, json_path]


_DISPATCH = {"run": _do_run, "scan": _do_scan, "friction": _do_friction,
             "hist": _do_hist}


def execute(cfg: RunConfig, threads: int = 1, err=sys.stderr):
    """Run one parsed configuration; returns the written paths."""
    return _DISPATCH[cfg.mode](cfg, threads, err)


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="cavicool",
        description="Stochastic simulator of cavity cooling and "
                    "self-trapping of a driven particle")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "single trajectory ensemble"),
                        ("scan", "two-parameter ensemble sweep"),
                        ("friction", "friction coefficient map"),
                        ("hist", "position distribution snapshot")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="config file path")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--seed", type=int,
                        help="master seed (overrides config)")
        sp.add_argument("--threads", type=int,
                        help="worker processes (default $CAVICOOL_THREADS "
                             "or 1)")
        sp.add_argument("--overwrite", action="store_true",
                        help="replace existing output files")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    err = sys.stderr

    try:
        text = Path(args.config).read_text()
    except OSError as e:
        _log(err, f"config error: {e}")
        return EXIT_CONFIG

    try:
        cfg = parse_config(text)
    except ConfigError as e:
        _log(err, f"config error:\n{e}")
        return EXIT_CONFIG

    if cfg.mode != args.command:
        _log(err, f"config error: config declares mode = {cfg.mode} but "
                  f"the subcommand is {args.command}")
        return EXIT_CONFIG

    if args.out is not None:
        cfg.out_dir = args.out
    if cfg.out_dir is None:
        _log(err, "config error: no output directory ([run] out or --out)")
        return EXIT_CONFIG
    if args.overwrite:
        cfg.overwrite = True
    if args.seed is not None and cfg.ensemble is not None:
        cfg.ensemble = replace(cfg.ensemble, seed=args.seed)

    if args.threads is not None:
        threads = args.threads
    else:
        threads = int(os.environ.get("CAVICOOL_THREADS", "1"))
    if threads < 1:
        _log(err, f"config error: threads must be >= 1, got {threads}")
        return EXIT_CONFIG

    try:
        paths = execute(cfg, threads=threads, err=err)
    except FileExistsError as e:
        _log(err, f"output refused: {e}")
        return EXIT_OUTPUT
    except (EnsembleError, ConvergenceError, IntegrationError,
            NoiseModelError, ValueError) as e:
        _log(err, f"run failed: {e}")
        return EXIT_RUNTIME

    for p in paths:
        _log(err, f"wrote {p}")
    return 0
