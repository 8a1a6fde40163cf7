"""Command-line entry point: run virtual experiments from a YAML config.

    trispin run <experiment> --config cfg.yaml [--seed N] [--threads N] [--out DIR]
    trispin list

Each run writes <experiment>.csv (one column per axis and observable, full
precision) and <experiment>.meta (JSON: resolved config, seed, version, fit
results). Outputs are byte-identical for identical (config, seed).
"""

import argparse
import os
import sys
import traceback

import numpy as np

from . import __version__
from .device import DeviceParams
from .dynamics import ExchangeConfig
from .experiments import (
    CoilModel,
    b_calibration,
    free_evolution,
    leakage_spectroscopy,
    leakage_vs_gap,
    lpi_sweep,
    spectrum_sweep,
    t2star_scan,
)
from .io import (
    ConfigError,
    EXPERIMENT_NAMES,
    grid_values,
    load_config,
    resolve_config,
    write_csv,
    write_meta,
)
from .noise import ChargeNoiseModel, HyperfineModel

_DESCRIPTIONS = {
    "spectrum": "eigenvalue fan versus J12 at fixed J13 = J23",
    "lpi-sweep": "RB-interleaved 3-J voltage map locating the equal-coupling point",
    "leakage-spectroscopy": "leakage population versus field with a double-Gaussian gap estimate",
    "free-evolution": "P0/P+/P1/PL traces during idling at a given gap",
    "t2star-scan": "dephasing time versus gap energy with power-law fits",
    "leakage-vs-gap": "leakage at fixed long dwell versus gap, with suppression slope",
    "b-calibration": "magnet calibration from 1-J leakage peaks and exchange-oscillation FFTs",
}


def _device_from(cfg):
    d = cfg["device"]
    return DeviceParams(
        j0_mhz=np.asarray(d["j0_mhz"], dtype=float),
        v0_volts=np.asarray(d["v0_volts"], dtype=float),
        cross_coupling=np.asarray(d["cross_coupling"], dtype=float),
        j_max_mhz=d["j_max_mhz"],
    )


def _noise_from(cfg):
    h = cfg["noise"]["hyperfine"]
    hyperfine = HyperfineModel(
        sigma_mhz=h["sigma_mhz"], mode=h["mode"], alpha=h["alpha"],
        band_hz=tuple(float(x) for x in h["band_hz"]),
    )
    charge = ChargeNoiseModel(sigma_volts=cfg["noise"]["charge"]["sigma_volts"])
    return hyperfine, charge


def _axis_columns(sweep):
    cols = []
    shapes = [len(ax.values) for ax in sweep.axes]
    if len(sweep.axes) == 1:
        ax = sweep.axes[0]
        label = f"{ax.name}_{ax.unit}" if ax.unit else ax.name
        cols.append((label, ax.values))
    else:
        mesh = np.meshgrid(*[ax.values for ax in sweep.axes], indexing="ij")
        for ax, values in zip(sweep.axes, mesh):
            label = f"{ax.name}_{ax.unit}" if ax.unit else ax.name
            cols.append((label, values.ravel()))
    return cols, shapes


def _sweep_columns(sweep, rename=None, units=None):
    rename = rename or {}
    units = units or {}
    cols, _ = _axis_columns(sweep)
    for name, arr in sweep.observables.items():
        label = rename.get(name, name)
        if name in units:
            label = f"{label}_{units[name]}"
        cols.append((label, np.asarray(arr).ravel()))
    return cols


def _fit_meta(fit):
    if fit is None:
        return None
    return {
        "model": fit.model,
        "converged": fit.converged,
        "params": fit.params,
        "errors": fit.errors,
        "residual_norm": fit.residual_norm,
        "extras": fit.extras,
    }


def _run_spectrum(cfg, seed, threads):
    sweep = spectrum_sweep(
        grid_values(cfg["grids"]["j12"]),
        j13_mhz=cfg["params"]["j13_mhz"],
        j23_mhz=cfg["params"]["j23_mhz"],
        bz_mhz=cfg["params"]["bz_mhz"],
    )
    units = {f"E{k}": "MHz" for k in range(1, 9)}
    return sweep, _sweep_columns(sweep, units=units), {}


def _run_lpi_sweep(cfg, seed, threads):
    p = cfg["params"]
    hyperfine, charge = _noise_from(cfg)
    noiseless = p["noiseless"]
    sweep = lpi_sweep(
        _device_from(cfg),
        grid_values(cfg["grids"]["va"]),
        grid_values(cfg["grids"]["vb"]),
        fixed_pair=p["fixed_pair"],
        fixed_value=p["fixed_value_v"],
        j_target_mhz=p["j_target_mhz"],
        rb_depth=p["rb_depth"],
        interleave_ns=p["interleave_ns"],
        rb_j_mhz=p["rb_j_mhz"],
        randomizations=p["randomizations"],
        hyperfine=None if noiseless else hyperfine,
        charge=None if noiseless else charge,
        shots=1 if noiseless else cfg["shots"],
        seed=seed,
        threads=threads,
        center_on_truth=p["center_on_truth"],
        refine_factor=p["refine_factor"] or None,
    )
    return sweep, _sweep_columns(sweep), {}


def _run_leakage_spectroscopy(cfg, seed, threads):
    p = cfg["params"]
    hyperfine, _ = _noise_from(cfg)
    sweep, fit = leakage_spectroscopy(
        p["j_mhz"],
        grid_values(cfg["grids"]["bz"]),
        hyperfine,
        dwell_us=p["dwell_us"],
        shots=cfg["shots"],
        seed=seed,
        policy=p["policy"],
        threads=threads,
    )
    return sweep, _sweep_columns(sweep), {"double_gaussian": _fit_meta(fit)}


def _run_free_evolution(cfg, seed, threads):
    p = cfg["params"]
    hyperfine, charge = _noise_from(cfg)
    sweep = free_evolution(
        p["eg_mhz"],
        grid_values(cfg["grids"]["t"]),
        hyperfine=hyperfine,
        charge=charge,
        shots=cfg["shots"],
        seed=seed,
        device=_device_from(cfg),
        policy=p["policy"],
        j_pulse_mhz=p["j_pulse_mhz"],
    )
    return sweep, _sweep_columns(sweep), {}


def _run_t2star_scan(cfg, seed, threads):
    p = cfg["params"]
    hyperfine, charge = _noise_from(cfg)
    sweep, fit_low, fit_high = t2star_scan(
        grid_values(cfg["grids"]["eg"]),
        hyperfine,
        charge=charge,
        shots=cfg["shots"],
        seed=seed,
        device=_device_from(cfg),
        low_window_mhz=tuple(p["low_window_mhz"]),
        high_window_mhz=tuple(p["high_window_mhz"]),
        threads=threads,
        t_max0_us=p["t_max0_us"],
        t_points=p["t_points"],
    )
    fits = {"low_window": _fit_meta(fit_low), "high_window": _fit_meta(fit_high)}
    return sweep, _sweep_columns(sweep), fits


def _run_leakage_vs_gap(cfg, seed, threads):
    p = cfg["params"]
    hyperfine, _ = _noise_from(cfg)
    sweep, fit = leakage_vs_gap(
        grid_values(cfg["grids"]["eg"]),
        hyperfine,
        dwell_us=p["dwell_us"],
        shots=cfg["shots"],
        seed=seed,
        threads=threads,
    )
    return sweep, _sweep_columns(sweep), {"suppression": _fit_meta(fit)}


def _run_b_calibration(cfg, seed, threads):
    p = cfg["params"]
    hyperfine, _ = _noise_from(cfg)
    coil = CoilModel(
        kappa_mt_per_ma=p["coil"]["kappa_mt_per_ma"],
        b_par_mt=p["coil"]["b_par_mt"],
        b_perp_mt=p["coil"]["b_perp_mt"],
    )
    gmub_mhz_per_mt = cfg["constants"]["gmub_ghz_per_t"]
    fit, data = b_calibration(
        p["j_values_mhz"],
        grid_values(cfg["grids"]["current"]),
        coil,
        hyperfine,
        shots=cfg["shots"],
        seed=seed,
        dwell_us=p["dwell_us"],
        osc_window_us=p["osc_window_us"],
        osc_dt_ns=p["osc_dt_ns"],
        gmub_mhz_per_mt=gmub_mhz_per_mt,
        threads=threads,
    )
    return data, _sweep_columns(data), {"coil_field": _fit_meta(fit)}


_RUNNERS = {
    "spectrum": _run_spectrum,
    "lpi-sweep": _run_lpi_sweep,
    "leakage-spectroscopy": _run_leakage_spectroscopy,
    "free-evolution": _run_free_evolution,
    "t2star-scan": _run_t2star_scan,
    "leakage-vs-gap": _run_leakage_vs_gap,
    "b-calibration": _run_b_calibration,
}


def list_experiments():
    """Stable (name, description) listing of available experiments."""
    return [(name, _DESCRIPTIONS[name]) for name in EXPERIMENT_NAMES]


def run(experiment, config_path, seed=None, threads=None, out_dir=None):
    """Execute one experiment; returns the process exit code."""
    try:
        raw = load_config(config_path)
        if experiment is not None:
            raw["experiment"] = experiment
        cfg = resolve_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    resolved_seed = int(seed) if seed is not None else cfg["seed"]
    cfg["seed"] = resolved_seed
    n_threads = int(threads) if threads is not None else cfg["threads"]
    target_dir = out_dir if out_dir is not None else cfg["output_dir"]
    name = cfg["experiment"]
    try:
        sweep, columns, fits = _RUNNERS[name](cfg, resolved_seed, n_threads)
    except Exception as exc:
        print(f"experiment error: {exc}", file=sys.stderr)
        traceback.print_exc()
        return 1
    os.makedirs(target_dir, exist_ok=True)
    csv_path = os.path.join(target_dir, f"{name}.csv")
    meta_path = os.path.join(target_dir, f"{name}.meta")
    write_csv(csv_path, columns)
    write_meta(
        meta_path,
        {
            "experiment": name,
            "version": __version__,
            "seed": resolved_seed,
            "config": cfg,
            "sweep_meta": sweep.meta,
            "fits": fits,
        },
    )
    print(csv_path)
    print(meta_path)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="trispin",
        description="virtual experiments on a triangular exchange-only spin qubit",
    )
    sub = parser.add_subparsers(dest="command")
    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("experiment", nargs="?", default=None,
                       help="experiment name (defaults to the config's)")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None, help="cap worker threads")
    p_run.add_argument("--out", default=None, help="override the output directory")
    sub.add_parser("list", help="list experiments")
    args = parser.parse_args(argv)
    if args.command == "list":
        for name, desc in list_experiments():
            print(f"{name}  -  {desc}")
        return 0
    if args.command == "run":
        if args.experiment is not None and args.experiment not in EXPERIMENT_NAMES:
            print(
                f"unknown experiment {args.experiment!r}; valid names: "
                + ", ".join(EXPERIMENT_NAMES),
                file=sys.stderr,
            )
            return 2
        return run(args.experiment, args.config, seed=args.seed,
                   threads=args.threads, out_dir=args.out)
    parser.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
