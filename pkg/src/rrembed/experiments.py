"""Drivers for kick spectroscopy, proton-tunneling reactivity and sweeps.

A :class:`Scenario` bundles everything one run needs: the explicit emitter,
its cavity, the ensemble susceptibility and the numerical settings. Sweeps
mutate one physical knob of a scenario at a time and run the points in
parallel processes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from . import fourier
from .environment import (
    CavitySpec,
    DrudeLorentz,
    MemoryKernel,
    SpectralGrid,
    SusceptibilityModel,
    bare_green,
    cavity_kernel,
    dress_green,
)
from .errors import ConfigurationError, SetupError
from .grid import EigenSolution, Grid1D, ParticleSpec, side_populations, solve_eigenstates
from .potentials import DeltaKick, PotentialSpec, SoftCoulomb, TiltedDoubleWell, fast_deformation_variant
from .propagation import DEFAULT_BLOCK, DipoleTrace, Observables, PropagationConfig, TimeDependentHamiltonian, propagate
from .units import FS_AU, HARTREE_EV, SPEED_OF_LIGHT, ev_to_au

logger = logging.getLogger(__name__)

LINEARITY_TOL = 0.02
MIN_LEFT_POPULATION = 0.9
SWEEP_AXES = ("n_ensemble", "detuning", "gamma_e", "g_ratio", "deformation_speed")


@dataclass(frozen=True)
class EmitterSpec:
    """The explicitly propagated particle: grid, particle and potential."""

    grid: Grid1D
    particle: ParticleSpec
    potential: PotentialSpec

    @classmethod
    def hydrogen(cls, n_points: int = 301, spacing: float = 0.1, softening: float = 1.0) -> "EmitterSpec":
        return cls(Grid1D(n_points, spacing), ParticleSpec.electron(), SoftCoulomb(softening))

    @classmethod
    def double_well(cls, n_points: int = 301, spacing: float = 0.04, well: TiltedDoubleWell | None = None) -> "EmitterSpec":
        return cls(Grid1D(n_points, spacing), ParticleSpec.proton(), well or TiltedDoubleWell())

    def hamiltonian(self) -> TimeDependentHamiltonian:
        return TimeDependentHamiltonian(self.grid, self.particle, [self.potential])

    def bare_states(self, k: int = 2) -> EigenSolution:
        """Lowest ``k`` eigenstates of the static ``t = 0`` Hamiltonian."""
        return _bare_states(self, k)

    def transition(self) -> tuple[float, float]:
        """``(omega_01, d_01)`` of the bare emitter in atomic units."""
        sol = self.bare_states(2)
        return float(sol.energies[1] - sol.energies[0]), sol.transition_dipole(0, 1, self.particle)


@lru_cache(maxsize=32)
def _bare_states(emitter: EmitterSpec, k: int) -> EigenSolution:
    H = emitter.hamiltonian().matrix(0.0)
    return solve_eigenstates(H, k, emitter.grid)


@dataclass(frozen=True)
class SpectrumSettings:
    """Numerics of a kick-spectroscopy run.

    ``window`` is the decay rate of the exponential damping applied to the
    dipole before transforming, i.e. the half width of the resulting
    Lorentzian line shape (Ha).
    """

    dt: float = 0.01
    n_steps: int = 800001
    oversampling: int = 10
    kernel_stride: int = 1
    kick: DeltaKick = DeltaKick()
    window: float = ev_to_au(0.05)
    omega_max: float = ev_to_au(20.0)
    pad: int = 4
    record_stride: int = 100
    check_linearity: bool = False
    block_size: Optional[int] = DEFAULT_BLOCK

    def __post_init__(self):
        if not self.window > 0:
            raise ConfigurationError("spectral window must be positive")
        if self.pad < 1:
            raise ConfigurationError("pad must be >= 1")


@dataclass(frozen=True)
class ReactivitySettings:
    dt: float = 0.5
    n_steps: int = 100001
    oversampling: int = 2000
    kernel_stride: int = 20
    record_stride: int = 10
    block_size: Optional[int] = DEFAULT_BLOCK


Settings = Union[SpectrumSettings, ReactivitySettings]


@dataclass(frozen=True)
class Scenario:
    emitter: EmitterSpec
    cavity: Optional[CavitySpec]
    chi: SusceptibilityModel
    settings: Settings

    @property
    def mode(self) -> str:
        return "spectrum" if isinstance(self.settings, SpectrumSettings) else "react"

    def spectral_grid(self) -> SpectralGrid:
        s = self.settings
        return SpectralGrid(s.dt, s.n_steps, s.oversampling, s.kernel_stride)

    def kernel(self) -> MemoryKernel:
        return cavity_kernel(self.cavity, self.chi, self.spectral_grid())


@dataclass
class SpectrumResult:
    omega_ev: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    warnings: list = field(default_factory=list)
    linearity_deviation: Optional[float] = None
    trace: Optional[DipoleTrace] = field(default=None, repr=False)
    observables: Optional[Observables] = field(default=None, repr=False)

    @property
    def omega(self) -> np.ndarray:
        return self.omega_ev / HARTREE_EV

    def weight(self, lo_ev: float, hi_ev: float) -> float:
        """``int sigma dw`` (w in Ha) over ``[lo_ev, hi_ev]``."""
        mask = (self.omega_ev >= lo_ev) & (self.omega_ev <= hi_ev)
        return float(np.trapezoid(self.sigma[mask], self.omega[mask]))

    def peaks(self, min_fraction: float = 0.05) -> np.ndarray:
        """Peak energies (eV) of ``sigma`` above ``min_fraction`` of its maximum."""
        from scipy.signal import find_peaks

        idx, _ = find_peaks(self.sigma, height=min_fraction * self.sigma.max())
        return self.omega_ev[idx]


@dataclass
class ReactivityResult:
    """``CR`` per ensemble size plus the tunneling traces behind it.

    ``delta_pop`` rows hold ``pop_left - pop_right`` of the coupled runs,
    ``reference`` the same for the uncoupled run.
    """

    N_values: np.ndarray
    CR: np.ndarray
    times: np.ndarray
    delta_pop: np.ndarray = field(repr=False)
    reference: np.ndarray = field(repr=False)


@dataclass
class ReferenceRun:
    """Uncoupled (kernel-free) trajectory shared by every coupled run."""

    times: np.ndarray
    pop_left: np.ndarray
    pop_right: np.ndarray


def resonant_cavity(emitter: EmitterSpec, g_ratio: float, eta_rel: float, detuning: float = 0.0, n_modes: int = 1) -> CavitySpec:
    """Cavity at ``(1 + detuning) omega_01`` with ``g0 = g_ratio * omega_c``.

    ``eta_rel`` is the loss relative to the bare emitter frequency. The
    volume follows from the bare transition dipole at ``omega_c``.
    """
    w01, d01 = emitter.transition()
    omega_c = (1.0 + detuning) * w01
    volume = CavitySpec.volume_for_coupling(g_ratio, omega_c, d01)
    return CavitySpec(omega_c, eta_rel * w01, volume, n_modes)


def _windowed_transform(trace: DipoleTrace, settings: SpectrumSettings):
    t = trace.times
    shift = np.maximum(t - settings.kick.center, 0.0)
    signal = (trace.R - trace.R[0]) * np.exp(-settings.window * shift)
    n = fourier.fast_length(settings.pad * len(t))
    omega = fourier.frequencies(n, settings.dt)
    keep = omega <= settings.omega_max
    return omega[keep], fourier.forward(signal, settings.dt, n)[keep]


def _kick_run(scenario: Scenario, kernel: MemoryKernel, kick: DeltaKick):
    s = scenario.settings
    emitter = scenario.emitter
    config = PropagationConfig(s.dt, s.n_steps, record_stride=s.record_stride, kick=kick, deform=False)
    psi0 = emitter.bare_states(1).ground_state
    return propagate(psi0, emitter.hamiltonian(), kernel, config, block_size=s.block_size)


def run_spectrum(scenario: Scenario, kernel: MemoryKernel | None = None) -> SpectrumResult:
    """Kick spectroscopy of the embedded emitter.

    The dipole response is damped by ``exp(-window (t - t_k))`` and
    transformed. The kick potential ``-K L(t) x`` is the field
    ``E(t) = K L(t) / q`` acting on charge ``q``, so ``alpha = q R(w) / (K L(w))``
    and the cross section is ``sigma = 4 pi w Im alpha / c``.

    Parameters
    ----------
    scenario : Scenario
        Must carry :class:`SpectrumSettings`.
    kernel : MemoryKernel, optional
        Precomputed kernel; built from the scenario when omitted.
    """
    s = scenario.settings
    if not isinstance(s, SpectrumSettings):
        raise ConfigurationError("run_spectrum needs SpectrumSettings")
    if kernel is None:
        kernel = scenario.kernel()
    trace, obs = _kick_run(scenario, kernel, s.kick)
    omega, r_w = _windowed_transform(trace, s)
    alpha = scenario.emitter.particle.charge * r_w / s.kick.spectrum(omega)
    sigma = 4.0 * np.pi * omega * alpha.imag / SPEED_OF_LIGHT
    result = SpectrumResult(omega * HARTREE_EV, sigma, alpha, trace=trace, observables=obs)
    if s.check_linearity:
        doubled = replace(s.kick, strength=2.0 * s.kick.strength)
        _, r2 = _windowed_transform(_kick_run(scenario, kernel, doubled)[0], s)
        deviation = abs(np.abs(r2).max() / (2.0 * np.abs(r_w).max()) - 1.0)
        result.linearity_deviation = float(deviation)
        if deviation > LINEARITY_TOL:
            msg = f"response is nonlinear: doubling the kick changes |R(w)| by {deviation:.2%} beyond linear scaling"
            logger.warning(msg)
            result.warnings.append(msg)
    return result


def _check_record_stride(scenario: Scenario):
    s = scenario.settings
    if scenario.cavity is not None and s.record_stride * s.dt >= 1.0 / (10.0 * scenario.cavity.omega_c):
        logger.warning(
            "record stride %d * dt = %g a.u. is not below 1/(10 omega_c) = %g a.u.",
            s.record_stride, s.record_stride * s.dt, 1.0 / (10.0 * scenario.cavity.omega_c),
        )


def _tunneling_run(emitter: EmitterSpec, settings: ReactivitySettings, kernel: MemoryKernel | None):
    psi0 = emitter.bare_states(1).ground_state
    left, _ = side_populations(psi0)
    if left < MIN_LEFT_POPULATION:
        raise SetupError(
            f"initial ground state is not left-localised (pop_left = {left:.4f} < {MIN_LEFT_POPULATION})"
        )
    config = PropagationConfig(settings.dt, settings.n_steps, settings.record_stride, deform=True)
    _, obs = propagate(psi0, emitter.hamiltonian(), kernel, config, block_size=settings.block_size)
    return obs


def uncoupled_reference(emitter: EmitterSpec, settings: ReactivitySettings) -> ReferenceRun:
    obs = _tunneling_run(emitter, settings, None)
    return ReferenceRun(obs.times, obs.pop_left, obs.pop_right)


def cavity_reactivity(times: np.ndarray, pop_right: np.ndarray, reference: ReferenceRun) -> float:
    """``(2/T) int (p_right - p_right^ref) dt`` by the trapezoid rule."""
    if times.shape != reference.times.shape or np.any(times != reference.times):
        raise ConfigurationError("coupled and reference runs were recorded on different time axes")
    span = times[-1] - times[0]
    return float(2.0 * np.trapezoid(pop_right - reference.pop_right, times) / span)


def run_reactivity(
    scenario: Scenario,
    n_values: Sequence[float] | None = None,
    reference: ReferenceRun | None = None,
) -> ReactivityResult:
    """Cavity influence on proton tunneling for each ensemble size.

    Coupled and uncoupled runs start from the same static ground state and
    share every numerical setting, so ``CR`` vanishes identically without a
    cavity.

    Parameters
    ----------
    scenario : Scenario
        Must carry :class:`ReactivitySettings`.
    n_values : sequence of float, optional
        Ensemble sizes replacing ``scenario.chi.n_ensemble``; by default the
        scenario is run as given.
    reference : ReferenceRun, optional
        Reuse a precomputed uncoupled trajectory.

    Raises
    ------
    SetupError
        If the initial state is not localised in the left (reactant) well.
    """
    s = scenario.settings
    if not isinstance(s, ReactivitySettings):
        raise ConfigurationError("run_reactivity needs ReactivitySettings")
    _check_record_stride(scenario)
    if reference is None:
        reference = uncoupled_reference(scenario.emitter, s)
    if n_values is None:
        n_values = [_n_ensemble(scenario.chi)]
    rows, cr = [], []
    for n in n_values:
        chi = _with_n(scenario.chi, n)
        kernel = cavity_kernel(scenario.cavity, chi, scenario.spectral_grid())
        obs = _tunneling_run(scenario.emitter, s, kernel)
        cr.append(cavity_reactivity(obs.times, obs.pop_right, reference))
        rows.append(obs.pop_difference)
    return ReactivityResult(
        N_values=np.asarray(n_values, dtype=float),
        CR=np.asarray(cr),
        times=reference.times,
        delta_pop=np.vstack(rows),
        reference=reference.pop_left - reference.pop_right,
    )


def _n_ensemble(chi: SusceptibilityModel) -> float:
    return 0.0 if chi is None else float(chi.n_ensemble)


def _with_n(chi: SusceptibilityModel, n: float) -> SusceptibilityModel:
    if chi is None:
        if n != 0:
            raise ConfigurationError("ensemble size given but no susceptibility model configured")
        return None
    return replace(chi, n_ensemble=n)


def apply_axis(scenario: Scenario, axis: str, value) -> Scenario:
    """Scenario with one physical knob changed.

    ``detuning`` moves cavity and Drude-Lorentz ensemble together to
    ``(1 + value) omega_01`` at fixed volume; ``gamma_e`` is relative to the
    ensemble frequency; ``g_ratio`` re-derives the volume (0 removes the
    cavity); ``deformation_speed`` takes ``"slow"``, ``"fast"`` or a sigmoid
    width in fs with the center at six widths.
    """
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    cavity, chi, emitter = scenario.cavity, scenario.chi, scenario.emitter
    if axis == "n_ensemble":
        chi = _with_n(chi, float(value))
    elif axis == "detuning":
        cavity = _require_cavity(cavity, axis)
        w01, _ = emitter.transition()
        omega = (1.0 + float(value)) * w01
        cavity = replace(cavity, omega_c=omega)
        if isinstance(chi, DrudeLorentz):
            chi = replace(chi, omega_0=omega)
    elif axis == "gamma_e":
        if not isinstance(chi, DrudeLorentz):
            raise ConfigurationError("gamma_e sweeps need a Drude-Lorentz ensemble")
        chi = replace(chi, gamma=float(value) * chi.omega_0)
    elif axis == "g_ratio":
        cavity = _require_cavity(cavity, axis)
        if float(value) == 0.0:
            cavity = None
        else:
            _, d01 = emitter.transition()
            cavity = replace(cavity, volume=CavitySpec.volume_for_coupling(float(value), cavity.omega_c, d01))
    elif axis == "deformation_speed":
        if not isinstance(emitter.potential, TiltedDoubleWell):
            raise ConfigurationError("deformation_speed sweeps need a tilted double well")
        emitter = replace(emitter, potential=deformation_variant(emitter.potential, value))
    return replace(scenario, emitter=emitter, cavity=cavity, chi=chi)


def deformation_variant(well: TiltedDoubleWell, value) -> TiltedDoubleWell:
    if value == "fast":
        return fast_deformation_variant(well)
    if value == "slow":
        return replace(well, t0=60.0 * FS_AU, tau=10.0 * FS_AU)
    tau = float(value) * FS_AU
    return replace(well, t0=6.0 * tau, tau=tau)


def _require_cavity(cavity, axis):
    if cavity is None:
        raise ConfigurationError(f"{axis} sweeps need a cavity in the base configuration")
    return cavity


@dataclass
class SweepResult:
    """Per-point results in input order; failed points carry an error string."""

    axis: str
    values: list
    results: list
    errors: list

    @property
    def ok(self) -> bool:
        return all(e is None for e in self.errors)


def _sweep_point(job):
    scenario, n_values, reference = job
    try:
        if scenario.mode == "spectrum":
            result = run_spectrum(scenario)
            result.trace = result.observables = None
            return result, None
        return run_reactivity(scenario, n_values, reference), None
    except Exception as exc:  # recorded per point, the sweep goes on
        return None, f"{type(exc).__name__}: {exc}"


def sweep(
    axis: str,
    values: Sequence,
    base: Scenario,
    jobs: int = 1,
    n_values: Sequence[float] | None = None,
) -> SweepResult:
    """Run ``base`` once per value of ``axis``.

    Reactivity points share one uncoupled reference unless the emitter
    itself changes along the axis. Points run in ``jobs`` worker processes.
    """
    values = list(values)
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    for v in values:
        if axis != "deformation_speed" and not math.isfinite(float(v)):
            raise ConfigurationError(f"sweep value {v!r} is not finite")
    scenarios = [apply_axis(base, axis, v) for v in values]
    reference = None
    if base.mode == "react" and axis != "deformation_speed":
        reference = uncoupled_reference(base.emitter, base.settings)
    points = [(s, n_values, reference) for s in scenarios]
    if jobs <= 1 or len(points) == 1:
        out = [_sweep_point(p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as pool:
            out = list(pool.map(_sweep_point, points))
    for v, (_, err) in zip(values, out):
        if err is not None:
            logger.error("sweep point %s=%r failed: %s", axis, v, err)
    return SweepResult(axis, values, [r for r, _ in out], [e for _, e in out])


def green_poles(scenario: Scenario, omega_min: float, omega_max: float, count: int | None = None) -> np.ndarray:
    """Peak positions of ``Im g`` of the dressed cavity (Ha)."""
    if scenario.cavity is None:
        return np.array([])
    sgrid = scenario.spectral_grid()
    g = dress_green(bare_green(scenario.cavity, sgrid), scenario.chi, sgrid)
    return g.pole_frequencies(omega_min, omega_max, count)


__all__ = [
    "EmitterSpec",
    "ReactivityResult",
    "ReactivitySettings",
    "ReferenceRun",
    "Scenario",
    "SpectrumResult",
    "SpectrumSettings",
    "SweepResult",
    "apply_axis",
    "cavity_reactivity",
    "green_poles",
    "resonant_cavity",
    "run_reactivity",
    "run_spectrum",
    "sweep",
    "uncoupled_reference",
]
