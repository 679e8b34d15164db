"""Run configuration: strict parsing, unit conversion and resolution.

Configuration files are YAML (JSON is accepted as a subset). Bare numbers
are atomic units; strings such as ``"10.746 eV"``, ``"60 fs"`` or
``"2 angstrom"`` carry their unit. Keys relative to the bare emitter
(``eta_rel``, ``omega_c: resonant``, ``g_ratio``, ``gamma_rel``) are resolved
to absolute atomic units at parse time, so the resolved form written to the
provenance sidecar parses back to an identical :class:`RunConfig`.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .environment import CavitySpec, DrudeLorentz, chi_from_polarizability, load_polarizability
from .errors import ConfigurationError, UnitError
from .experiments import EmitterSpec, ReactivitySettings, Scenario, SpectrumSettings
from .grid import Grid1D, ParticleSpec
from .potentials import DeltaKick, SampledPotential, SoftCoulomb, TiltedDoubleWell
from .units import FS_AU, HARTREE_EV, PROTON_MASS

EXPERIMENTS = ("spectrum", "react", "sweep", "hopfield", "kernel")

ANGSTROM_BOHR = 1.0 / 0.529177210903

UNITS = {
    "energy": {"ha": 1.0, "hartree": 1.0, "au": 1.0, "a.u.": 1.0, "ev": 1.0 / HARTREE_EV, "mev": 1e-3 / HARTREE_EV},
    "time": {"au": 1.0, "a.u.": 1.0, "fs": FS_AU, "ps": 1e3 * FS_AU},
    "length": {"au": 1.0, "a.u.": 1.0, "bohr": 1.0, "a0": 1.0, "angstrom": ANGSTROM_BOHR, "a": ANGSTROM_BOHR},
    "volume": {"au": 1.0, "a.u.": 1.0, "bohr^3": 1.0, "a0^3": 1.0, "angstrom^3": ANGSTROM_BOHR**3},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s]+)?\s*$")


def to_au(value, kind: str, key: str) -> float:
    """Convert a number (a.u.) or ``"<value> <unit>"`` string of a given kind."""
    if isinstance(value, bool):
        raise ConfigurationError(f"{key}: expected {kind} (number or '<value> <unit>'), got bool")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigurationError(f"{key}: expected {kind} (number or '<value> <unit>'), got {type(value).__name__}")
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigurationError(f"{key}: cannot read {value!r} as a {kind}")
    number, unit = float(m.group(1)), (m.group(2) or "au").lower()
    table = UNITS[kind]
    if unit not in table:
        other = [k for k, t in UNITS.items() if unit in t]
        hint = f" ({unit!r} is a {other[0]} unit)" if other else ""
        raise UnitError(f"{key}: {unit!r} is not a {kind} unit{hint}; expected one of {', '.join(table)}")
    return number * table[unit]


def _typed(value, kind: str, key: str):
    if kind in UNITS:
        return to_au(value, kind, key)
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigurationError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key}: expected true/false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigurationError(f"{key}: expected a string, got {value!r}")
        return value
    if kind == "floats":
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigurationError(f"{key}: expected a non-empty list of numbers")
        return tuple(_typed(v, "float", f"{key}[{i}]") for i, v in enumerate(value))
    if kind == "values":
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigurationError(f"{key}: expected a non-empty list")
        return tuple(v if isinstance(v, str) else _typed(v, "float", f"{key}[{i}]") for i, v in enumerate(value))
    raise AssertionError(kind)


def _kind(kind: str, **kw):
    return field(metadata={"kind": kind}, **kw)


@dataclass(frozen=True)
class SystemConfig:
    model: str = _kind("str", default="hydrogen")
    n_points: int = _kind("int", default=301)
    spacing: float = _kind("length", default=0.1)
    mass: float = _kind("float", default=1.0)
    charge: float = _kind("float", default=-1.0)
    softening: float = _kind("float", default=1.0)
    c1: float = _kind("energy", default=1e-3)
    c2: float = _kind("energy", default=1.25e-3)
    c4: float = _kind("energy", default=1e-4)
    amplitude: float = _kind("float", default=0.4)
    t0: float = _kind("time", default=60.0 * FS_AU)
    tau: float = _kind("time", default=10.0 * FS_AU)
    potential_file: Optional[str] = _kind("str", default=None)


@dataclass(frozen=True)
class CavityConfig:
    omega_c: float = _kind("energy", default=0.0)
    eta: float = _kind("energy", default=0.0)
    volume: float = _kind("volume", default=0.0)
    n_modes: int = _kind("int", default=1)


@dataclass(frozen=True)
class EnsembleConfig:
    model: str = _kind("str", default="drude_lorentz")
    n_ensemble: float = _kind("float", default=0.0)
    omega_p: float = _kind("energy", default=0.0)
    omega_0: float = _kind("energy", default=0.0)
    gamma: float = _kind("energy", default=0.0)
    volume_ratio: float = _kind("float", default=1.0)
    file: Optional[str] = _kind("str", default=None)
    v_e: float = _kind("volume", default=1.0)
    dilute: bool = _kind("bool", default=True)


@dataclass(frozen=True)
class PropagationSection:
    dt: float = _kind("time", default=0.01)
    n_steps: int = _kind("int", default=800001)
    record_stride: int = _kind("int", default=100)
    block_size: int = _kind("int", default=4096)


@dataclass(frozen=True)
class SpectralSection:
    oversampling: int = _kind("int", default=10)
    kernel_stride: int = _kind("int", default=1)


@dataclass(frozen=True)
class KickSection:
    strength: float = _kind("float", default=1e-4)
    center: float = _kind("time", default=1.0)
    width: float = _kind("time", default=1e-2)


@dataclass(frozen=True)
class SpectrumSection:
    window: float = _kind("energy", default=0.05 / HARTREE_EV)
    omega_max: float = _kind("energy", default=20.0 / HARTREE_EV)
    pad: int = _kind("int", default=4)
    check_linearity: bool = _kind("bool", default=False)


@dataclass(frozen=True)
class ReactivitySection:
    n_values: tuple = _kind("floats", default=(0.0,))


@dataclass(frozen=True)
class SweepSection:
    axis: str = _kind("str", default="n_ensemble")
    values: tuple = _kind("values", default=(0.0,))
    mode: str = _kind("str", default="react")
    n_values: Optional[tuple] = _kind("floats", default=None)
    jobs: int = _kind("int", default=0)


@dataclass(frozen=True)
class HopfieldSection:
    omega_c: float = _kind("energy", default=11.7 / HARTREE_EV)
    omega_E: float = _kind("energy", default=11.7 / HARTREE_EV)
    omega_m: float = _kind("energy", default=10.746 / HARTREE_EV)
    g: float = _kind("energy", default=0.011 / HARTREE_EV)
    g_m: float = _kind("energy", default=0.011 / HARTREE_EV)
    n_values: tuple = _kind("floats", default=tuple(sorted({float(round(10 ** (k / 8))) for k in range(33)})))


@dataclass(frozen=True)
class KernelSection:
    omega_max: float = _kind("energy", default=0.0)
    write_green: bool = _kind("bool", default=True)


@dataclass(frozen=True)
class OutputSection:
    dir: str = _kind("str", default="out")
    plot_script: bool = _kind("bool", default=False)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description, all quantities in atomic units."""

    experiment: str
    system: SystemConfig
    propagation: PropagationSection
    spectral: SpectralSection
    kick: KickSection
    spectrum: SpectrumSection
    reactivity: ReactivitySection
    kernel: KernelSection
    output: OutputSection
    cavity: Optional[CavityConfig] = None
    ensemble: Optional[EnsembleConfig] = None
    sweep: Optional[SweepSection] = None
    hopfield: Optional[HopfieldSection] = None

    @property
    def mode(self) -> str:
        """Which kind of propagation backs this experiment."""
        if self.experiment == "sweep":
            return self.sweep.mode
        if self.experiment == "kernel":
            return "react"
        return self.experiment

    def to_dict(self) -> dict:
        return asdict(self)


# Defaults that follow the kind of run: linear-response spectra on hydrogen,
# proton tunneling in the deforming double well.
MODE_DEFAULTS = {
    "spectrum": {
        "system": {"model": "hydrogen"},
        "propagation": {"dt": 0.01, "n_steps": 800001, "record_stride": 100},
        "spectral": {"oversampling": 10, "kernel_stride": 1},
        "cavity": {"eta_rel": 1e-2, "g_ratio": 0.0563},
        "ensemble": {"omega_p": "0.04743416490252569 eV", "gamma_rel": 0.1},
    },
    "react": {
        "system": {"model": "double_well"},
        "propagation": {"dt": 0.5, "n_steps": 100001, "record_stride": 10},
        "spectral": {"oversampling": 2000, "kernel_stride": 20},
        "cavity": {"eta_rel": 1e-4, "g_ratio": 0.0135},
        "ensemble": {"omega_p": "6.387e-4 eV", "gamma_rel": 0.025},
    },
}

SYSTEM_DEFAULTS = {
    "hydrogen": {"n_points": 301, "spacing": 0.1, "mass": 1.0, "charge": -1.0},
    "double_well": {"n_points": 301, "spacing": 0.04, "mass": PROTON_MASS, "charge": 1.0},
    "sampled": {"n_points": 301, "spacing": 0.1, "mass": 1.0, "charge": -1.0},
}

TOP_KEYS = (
    "experiment", "system", "cavity", "ensemble", "propagation", "spectral", "kick",
    "spectrum", "reactivity", "sweep", "hopfield", "kernel", "output",
)


def _section(cls, raw, key: str, extra: tuple = (), defaults: dict | None = None):
    """Build a section dataclass, rejecting unknown keys."""
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{key}: expected a mapping, got {type(raw).__name__}")
    names = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(names) - set(extra))
    if unknown:
        raise ConfigurationError(
            f"{key}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(set(names) | set(extra)))}"
        )
    values = {}
    merged = {**(defaults or {}), **raw}
    for name, f in names.items():
        if name in merged and merged[name] is not None:
            values[name] = _typed(merged[name], f.metadata["kind"], f"{key}.{name}")
        elif name in merged:
            values[name] = None
    return cls(**values)


def _read(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML/JSON: {exc}") from exc


def parse_config(path, experiment: str | None = None) -> RunConfig:
    """Read and resolve a configuration file.

    ``experiment`` (typically a CLI subcommand) fills in or must agree with
    the file's ``experiment`` key. Relative paths inside the file are taken
    relative to the file's directory.
    """
    path = Path(path)
    raw = _read(path)
    return resolve(raw, experiment=experiment, base_dir=path.parent)


def resolve(raw: Any, experiment: str | None = None, base_dir: Path | str = ".") -> RunConfig:
    """Resolve a raw mapping (as loaded from YAML/JSON) into a :class:`RunConfig`."""
    base_dir = Path(base_dir)
    if raw is None or raw == {}:
        if experiment is None:
            raise ConfigurationError("configuration is empty; required keys: experiment")
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"configuration must be a mapping, got {type(raw).__name__}")
    unknown = sorted(set(raw) - set(TOP_KEYS))
    if unknown:
        raise ConfigurationError(f"unknown top-level key(s) {', '.join(unknown)}; allowed: {', '.join(TOP_KEYS)}")

    tag = raw.get("experiment", experiment)
    if tag is None:
        raise ConfigurationError("missing required key: experiment (one of " + ", ".join(EXPERIMENTS) + ")")
    if tag not in EXPERIMENTS:
        raise ConfigurationError(f"experiment: expected one of {', '.join(EXPERIMENTS)}, got {tag!r}")
    if experiment is not None and tag != experiment:
        raise ConfigurationError(f"subcommand {experiment!r} does not match experiment {tag!r} in the file")

    sweep = None
    if tag == "sweep":
        if raw.get("sweep") is None:
            raise ConfigurationError("sweep experiments need a 'sweep' section with axis and values")
        sweep = _section(SweepSection, raw["sweep"], "sweep")
        if sweep.mode not in ("spectrum", "react"):
            raise ConfigurationError(f"sweep.mode: expected spectrum or react, got {sweep.mode!r}")
    mode = sweep.mode if sweep else ("react" if tag == "kernel" else "spectrum" if tag == "hopfield" else tag)
    md = MODE_DEFAULTS[mode]

    sys_raw = dict(raw.get("system") or {})
    model = sys_raw.get("model", md["system"]["model"])
    if model not in SYSTEM_DEFAULTS:
        raise ConfigurationError(f"system.model: expected one of {', '.join(SYSTEM_DEFAULTS)}, got {model!r}")
    system = _section(SystemConfig, sys_raw, "system", defaults={"model": model, **SYSTEM_DEFAULTS[model]})
    if system.model == "sampled":
        if system.potential_file is None:
            raise ConfigurationError("system.potential_file is required for the sampled model")
        system = replace(system, potential_file=str(_existing(base_dir, system.potential_file, "system.potential_file")))

    propagation = _section(PropagationSection, raw.get("propagation"), "propagation", defaults=md["propagation"])
    spectral = _section(SpectralSection, raw.get("spectral"), "spectral", defaults=md["spectral"])
    kick = _section(KickSection, raw.get("kick"), "kick")
    spectrum = _section(SpectrumSection, raw.get("spectrum"), "spectrum")
    reactivity = _section(ReactivitySection, raw.get("reactivity"), "reactivity")
    kernel = _section(KernelSection, raw.get("kernel"), "kernel")
    output = _section(OutputSection, raw.get("output"), "output")
    hopfield = None
    if tag == "hopfield" or raw.get("hopfield") is not None:
        hopfield = _section(HopfieldSection, raw.get("hopfield"), "hopfield")

    cfg = RunConfig(
        experiment=tag, system=system, propagation=propagation, spectral=spectral, kick=kick,
        spectrum=spectrum, reactivity=reactivity, kernel=kernel, output=output,
        sweep=sweep, hopfield=hopfield,
    )
    emitter = None
    if "cavity" in raw and raw["cavity"] is not None:
        emitter = build_emitter(cfg.system)
        cfg = replace(cfg, cavity=_resolve_cavity(raw["cavity"], md["cavity"], emitter))
    if "ensemble" in raw and raw["ensemble"] is not None:
        cfg = replace(cfg, ensemble=_resolve_ensemble(raw["ensemble"], md["ensemble"], cfg.cavity, base_dir))
    if tag == "kernel" and cfg.cavity is None:
        raise ConfigurationError("kernel experiments need a 'cavity' section")
    _validate(cfg)
    return cfg


def _existing(base_dir: Path, name: str, key: str) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = (base_dir / p).resolve()
    if not p.exists():
        raise ConfigurationError(f"{key}: file {p} does not exist")
    return p


def _resolve_cavity(raw, defaults: dict, emitter: EmitterSpec) -> CavityConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"cavity: expected a mapping, got {type(raw).__name__}")
    raw = dict(raw)
    w01, d01 = emitter.transition()
    detuning = _typed(raw.pop("detuning", 0.0), "float", "cavity.detuning")
    omega_c = raw.get("omega_c", "resonant")
    if omega_c == "resonant":
        raw["omega_c"] = (1.0 + detuning) * w01
    elif detuning != 0.0:
        raise ConfigurationError("cavity.detuning only applies with omega_c: resonant")
    if "eta" in raw and "eta_rel" in raw:
        raise ConfigurationError("cavity: give either eta or eta_rel, not both")
    if "volume" in raw and "g_ratio" in raw:
        raise ConfigurationError("cavity: give either volume or g_ratio, not both")
    if "eta" not in raw:
        raw["eta"] = _typed(raw.pop("eta_rel", defaults["eta_rel"]), "float", "cavity.eta_rel") * w01
    omega = to_au(raw["omega_c"], "energy", "cavity.omega_c")
    if "volume" not in raw:
        g_ratio = _typed(raw.pop("g_ratio", defaults["g_ratio"]), "float", "cavity.g_ratio")
        raw["volume"] = CavitySpec.volume_for_coupling(g_ratio, omega, d01)
    out = _section(CavityConfig, raw, "cavity")
    CavitySpec(out.omega_c, out.eta, out.volume, out.n_modes)
    return out


def _resolve_ensemble(raw, defaults: dict, cavity: CavityConfig | None, base_dir: Path) -> EnsembleConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"ensemble: expected a mapping, got {type(raw).__name__}")
    raw = dict(raw)
    model = raw.get("model", "drude_lorentz")
    if model == "drude_lorentz":
        if raw.get("omega_0", "cavity") == "cavity":
            if cavity is None:
                raise ConfigurationError("ensemble.omega_0 defaults to the cavity frequency, but no cavity is configured")
            raw["omega_0"] = cavity.omega_c
        omega_0 = to_au(raw["omega_0"], "energy", "ensemble.omega_0")
        if "gamma" in raw and "gamma_rel" in raw:
            raise ConfigurationError("ensemble: give either gamma or gamma_rel, not both")
        if "gamma" not in raw:
            raw["gamma"] = _typed(raw.pop("gamma_rel", defaults["gamma_rel"]), "float", "ensemble.gamma_rel") * omega_0
        raw.setdefault("omega_p", defaults["omega_p"])
        out = _section(EnsembleConfig, raw, "ensemble")
        DrudeLorentz(out.omega_p, out.omega_0, out.gamma, out.n_ensemble, out.volume_ratio)
        return out
    if model == "tabulated":
        if raw.get("file") is None:
            raise ConfigurationError("ensemble.file is required for a tabulated ensemble")
        out = _section(EnsembleConfig, raw, "ensemble")
        return replace(out, file=str(_existing(base_dir, out.file, "ensemble.file")))
    raise ConfigurationError(f"ensemble.model: expected drude_lorentz or tabulated, got {model!r}")


def _validate(cfg: RunConfig):
    p = cfg.propagation
    if not p.dt > 0:
        raise ConfigurationError("propagation.dt must be positive")
    if p.n_steps < 1 or p.record_stride < 1 or p.block_size < 1:
        raise ConfigurationError("propagation.n_steps, record_stride and block_size must be >= 1")
    if cfg.spectral.oversampling < 1 or cfg.spectral.kernel_stride < 1:
        raise ConfigurationError("spectral.oversampling and kernel_stride must be >= 1")
    if cfg.sweep is not None:
        from .experiments import SWEEP_AXES

        if cfg.sweep.axis not in SWEEP_AXES:
            raise ConfigurationError(f"sweep.axis: expected one of {', '.join(SWEEP_AXES)}, got {cfg.sweep.axis!r}")
        for v in cfg.sweep.values:
            if isinstance(v, str) and not (cfg.sweep.axis == "deformation_speed" and v in ("slow", "fast")):
                raise ConfigurationError(f"sweep.values: {v!r} is not valid for axis {cfg.sweep.axis}")
            if not isinstance(v, str) and not math.isfinite(v):
                raise ConfigurationError(f"sweep.values: {v!r} is not finite")


def with_oversampling(cfg: RunConfig, factor: int) -> RunConfig:
    return replace(cfg, spectral=replace(cfg.spectral, oversampling=int(factor)))


def build_emitter(system: SystemConfig) -> EmitterSpec:
    grid = Grid1D(system.n_points, system.spacing)
    particle = ParticleSpec(system.mass, system.charge)
    if system.model == "hydrogen":
        potential = SoftCoulomb(system.softening)
    elif system.model == "double_well":
        potential = TiltedDoubleWell(system.c1, system.c2, system.c4, system.amplitude, system.t0, system.tau)
    else:
        potential = SampledPotential.from_array(np.loadtxt(system.potential_file))
    return EmitterSpec(grid, particle, potential)


def build_cavity(cfg: RunConfig) -> CavitySpec | None:
    c = cfg.cavity
    return None if c is None else CavitySpec(c.omega_c, c.eta, c.volume, c.n_modes)


def build_chi(cfg: RunConfig):
    e = cfg.ensemble
    if e is None:
        return None
    if e.model == "drude_lorentz":
        return DrudeLorentz(e.omega_p, e.omega_0, e.gamma, e.n_ensemble, e.volume_ratio)
    omega, alpha = load_polarizability(e.file)
    return chi_from_polarizability(omega, alpha, e.n_ensemble, e.v_e, e.dilute)


def build_scenario(cfg: RunConfig) -> Scenario:
    p, sp = cfg.propagation, cfg.spectral
    if cfg.mode == "spectrum":
        k, s = cfg.kick, cfg.spectrum
        settings = SpectrumSettings(
            dt=p.dt, n_steps=p.n_steps, oversampling=sp.oversampling, kernel_stride=sp.kernel_stride,
            kick=DeltaKick(k.strength, k.center, k.width), window=s.window, omega_max=s.omega_max,
            pad=s.pad, record_stride=p.record_stride, check_linearity=s.check_linearity, block_size=p.block_size,
        )
    else:
        settings = ReactivitySettings(
            dt=p.dt, n_steps=p.n_steps, oversampling=sp.oversampling, kernel_stride=sp.kernel_stride,
            record_stride=p.record_stride, block_size=p.block_size,
        )
    return Scenario(build_emitter(cfg.system), build_cavity(cfg), build_chi(cfg), settings)


__all__ = [
    "EXPERIMENTS",
    "RunConfig",
    "build_scenario",
    "parse_config",
    "resolve",
    "to_au",
    "with_oversampling",
]
