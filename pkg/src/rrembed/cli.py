"""Command-line entry point: ``rrembed <experiment> --config run.yaml``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, RunConfig, build_scenario, parse_config, with_oversampling
from .environment import bare_green, dress_green, kernel_from_green
from .errors import ConfigurationError, NumericalError, RRError
from .experiments import SpectrumResult, run_reactivity, run_spectrum, sweep
from .hopfield import HopfieldSpec, bright_dark_reduce, polariton_weights
from .units import AU_TIME_FS, HARTREE_EV

logger = logging.getLogger("rrembed")

FMT = "%.17g"

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 1, 2, 3, 4


def write_table(path: Path, columns: list[str], data) -> Path:
    """Whitespace-delimited table with a ``#`` header and 17 significant digits."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    np.savetxt(path, data, fmt=FMT, header=" ".join(columns), comments="# ")
    return path


def _json_default(obj):
    if isinstance(obj, tuple):
        return list(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _versions() -> dict:
    import numba
    import scipy
    import yaml

    return {
        "rrembed": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "pyyaml": yaml.__version__,
    }


def _spectrum_outputs(out: Path, result: SpectrumResult, stem: str = "") -> list[Path]:
    files = [
        write_table(
            out / f"spectrum{stem}.dat",
            ["omega_eV", "sigma", "alpha_re", "alpha_im"],
            np.column_stack([result.omega_ev, result.sigma, result.alpha.real, result.alpha.imag]),
        )
    ]
    obs, trace = result.observables, result.trace
    if obs is not None and trace is not None:
        idx = np.searchsorted(trace.times, obs.times)
        files.append(write_table(
            out / f"trace{stem}.dat",
            ["t_fs", "R_au", "Rdot_au", "norm", "pop_left", "pop_right", "E_rr_au"],
            np.column_stack([
                obs.times * AU_TIME_FS, trace.R[idx], trace.Rdot[idx],
                obs.norm, obs.pop_left, obs.pop_right, obs.e_rr,
            ]),
        ))
    return files


def run_spectrum_cmd(cfg: RunConfig, out: Path, jobs: int) -> dict:
    result = run_spectrum(build_scenario(cfg))
    files = _spectrum_outputs(out, result)
    peaks = result.peaks()
    return {
        "files": [f.name for f in files],
        "warnings": result.warnings,
        "derived": {"peaks_eV": peaks.tolist(), "linearity_deviation": result.linearity_deviation},
        "plots": [("spectrum.dat", 1, 2, "omega (eV)", "sigma (a.u.)")],
    }


def run_react_cmd(cfg: RunConfig, out: Path, jobs: int) -> dict:
    scenario = build_scenario(cfg)
    n_values = cfg.reactivity.n_values
    result = run_reactivity(scenario, n_values)
    files = [
        write_table(out / "reactivity.dat", ["N_ensemble", "CR"], np.column_stack([result.N_values, result.CR])),
        write_table(
            out / "tunneling.dat",
            ["t_fs", "dpop_uncoupled"] + [f"dpop_N{n:g}" for n in result.N_values],
            np.column_stack([result.times * AU_TIME_FS, result.reference, result.delta_pop.T]),
        ),
    ]
    return {
        "files": [f.name for f in files],
        "warnings": [],
        "derived": {"CR": result.CR.tolist()},
        "plots": [("reactivity.dat", 1, 2, "N_ensemble", "CR")],
    }


def run_sweep_cmd(cfg: RunConfig, out: Path, jobs: int) -> dict:
    sw = cfg.sweep
    scenario = build_scenario(cfg)
    n_values = sw.n_values if sw.n_values is not None else cfg.reactivity.n_values
    result = sweep(sw.axis, sw.values, scenario, jobs=jobs, n_values=n_values)
    rows = []
    for i, (value, res) in enumerate(zip(sw.values, result.results)):
        if res is None:
            continue
        key = _axis_value(value)
        if sw.mode == "react":
            rows.extend([i, key, n, cr] for n, cr in zip(res.N_values, res.CR))
        else:
            rows.extend([i, key, w, s] for w, s in zip(res.omega_ev, res.sigma))
    cols = ["index", sw.axis] + (["N_ensemble", "CR"] if sw.mode == "react" else ["omega_eV", "sigma"])
    files = [write_table(out / "sweep.dat", cols, np.array(rows, dtype=float).reshape(-1, 4))]
    failed = [{"index": i, "value": v, "error": e} for i, (v, e) in enumerate(zip(sw.values, result.errors)) if e]
    return {
        "files": [f.name for f in files],
        "warnings": [],
        "failed_points": failed,
        "derived": {},
        "plots": [("sweep.dat", 3, 4, cols[2], cols[3])],
    }


def _axis_value(value) -> float:
    if value == "slow":
        return 10.0
    if value == "fast":
        return 1.0
    return float(value)


def run_hopfield_cmd(cfg: RunConfig, out: Path, jobs: int) -> dict:
    h = cfg.hopfield
    rows = []
    for n in h.n_values:
        spec = HopfieldSpec(h.omega_c, h.omega_E, h.omega_m, h.g, h.g_m, int(n))
        block, _ = bright_dark_reduce(spec)
        energies, weights = polariton_weights(block, "bright")
        rows.append(
            [int(n), h.g * np.sqrt(int(n)) * HARTREE_EV]
            + list(energies * HARTREE_EV)
            + list(weights.ravel())
        )
    cols = ["N", "g_sqrtN_eV", "E1_eV", "E2_eV", "E3_eV"]
    for k in (1, 2, 3):
        cols += [f"photon{k}", f"bright{k}", f"molecule{k}"]
    files = [write_table(out / "hopfield.dat", cols, rows)]
    return {
        "files": [f.name for f in files],
        "warnings": [],
        "derived": {},
        "plots": [("hopfield.dat", 2, 3, "g sqrt(N) (eV)", "energy (eV)")],
    }


def run_kernel_cmd(cfg: RunConfig, out: Path, jobs: int) -> dict:
    scenario = build_scenario(cfg)
    sgrid = scenario.spectral_grid()
    g = dress_green(bare_green(scenario.cavity, sgrid), scenario.chi, sgrid)
    kernel = kernel_from_green(g, sgrid)
    stride = cfg.propagation.record_stride
    files = [write_table(
        out / "kernel.dat", ["t_fs", "K"],
        np.column_stack([kernel.times[::stride] * AU_TIME_FS, kernel.values[::stride]]),
    )]
    if cfg.kernel.write_green:
        top = cfg.kernel.omega_max or 2.0 * scenario.cavity.omega_c
        keep = g.omega <= top
        files.append(write_table(
            out / "green.dat", ["omega_eV", "g_re", "g_im"],
            np.column_stack([g.omega[keep] * HARTREE_EV, g.values.real[keep], g.values.imag[keep]]),
        ))
    poles = g.pole_frequencies(0.0, 2.0 * scenario.cavity.omega_c, count=3)
    return {
        "files": [f.name for f in files],
        "warnings": [],
        "derived": {"green_poles_eV": (poles * HARTREE_EV).tolist()},
        "plots": [("kernel.dat", 1, 2, "t (fs)", "K (a.u.)")],
    }


COMMANDS = {
    "spectrum": run_spectrum_cmd,
    "react": run_react_cmd,
    "sweep": run_sweep_cmd,
    "hopfield": run_hopfield_cmd,
    "kernel": run_kernel_cmd,
}


def write_plot_script(out: Path, plots) -> Path:
    lines = ["set terminal pngcairo size 900,600", ""]
    for name, xcol, ycol, xlabel, ylabel in plots:
        stem = Path(name).stem
        lines += [
            f"set output '{stem}.png'",
            f"set xlabel '{xlabel}'",
            f"set ylabel '{ylabel}'",
            f"plot '{name}' using {xcol}:{ycol} with lines notitle",
            "",
        ]
    path = out / "plot.gp"
    path.write_text("\n".join(lines))
    return path


def dispatch(cfg: RunConfig, out: Path | None = None, jobs: int | None = None) -> int:
    """Run the configured experiment, writing tables and ``provenance.json``.

    Returns the process exit status: 0 on success, 4 if some sweep points
    failed. Exceptions propagate to :func:`main`.
    """
    out = Path(out or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "error.json").unlink(missing_ok=True)
    if jobs is None:
        jobs = (cfg.sweep.jobs if cfg.sweep is not None else 0) or (os.cpu_count() or 1)
    start = time.perf_counter()
    report = COMMANDS[cfg.experiment](cfg, out, jobs)
    wall = time.perf_counter() - start
    if cfg.output.plot_script:
        report["files"].append(write_plot_script(out, report["plots"]).name)
    provenance = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "versions": _versions(),
        "wall_time_s": wall,
        "files": report["files"],
        "warnings": report["warnings"],
        "derived": report["derived"],
    }
    status = EXIT_OK
    if report.get("failed_points"):
        provenance["failed_points"] = report["failed_points"]
        _write_error(out, "SweepPointError", f"{len(report['failed_points'])} sweep point(s) failed",
                     {"failed_points": report["failed_points"]})
        status = EXIT_PARTIAL
    _write_json(out / "provenance.json", provenance)
    return status


def _write_json(path: Path, record: dict):
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=_json_default) + "\n")


def _write_error(out: Path, kind: str, message: str, context: dict | None = None):
    record = {"error": kind, "message": message}
    if context:
        record["context"] = context
    _write_json(out / "error.json", record)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrembed",
        description="Radiation-reaction embedding of a single emitter in an ensemble-dressed cavity.",
    )
    parser.add_argument(
        "command", nargs="?", default="run", choices=("run",) + EXPERIMENTS,
        help="experiment to run; 'run' takes it from the config file",
    )
    parser.add_argument("--config", required=True, help="YAML or JSON run configuration")
    parser.add_argument("--out", help="output directory (default: output.dir of the config)")
    parser.add_argument("--jobs", type=int, help="parallel sweep workers (default: available cores)")
    parser.add_argument("--oversample", type=int, help="override spectral.oversampling")
    parser.add_argument("--dry-run", action="store_true", help="resolve and echo the configuration only")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else None
    try:
        cfg = parse_config(args.config, None if args.command == "run" else args.command)
        if args.oversample is not None:
            if args.oversample < 1:
                raise ConfigurationError("--oversample must be >= 1")
            cfg = with_oversampling(cfg, args.oversample)
        out = out or Path(cfg.output.dir)
        if args.dry_run:
            text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True, default=_json_default)
            out.mkdir(parents=True, exist_ok=True)
            (out / "resolved_config.json").write_text(text + "\n")
            print(text)
            return EXIT_OK
        return dispatch(cfg, out, args.jobs)
    except Exception as exc:
        if isinstance(exc, ConfigurationError):
            status = EXIT_CONFIG
        elif isinstance(exc, NumericalError):
            status = EXIT_NUMERICAL
        else:
            status = EXIT_FAILURE
        if not isinstance(exc, RRError) and not isinstance(exc, (ValueError, OSError)):
            logger.exception("unexpected failure")
        target = out or Path(".")
        try:
            target.mkdir(parents=True, exist_ok=True)
            _write_error(target, type(exc).__name__, str(exc), {"config": str(args.config)})
        except OSError:
            pass
        print(f"rrembed: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return status


if __name__ == "__main__":
    sys.exit(main())
