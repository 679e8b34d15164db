"""RK4 propagation with a self-consistent radiation-reaction potential.

At every step ``n`` the dipole ``R_n`` of the current state is measured, the
trailing velocity ``(R_n - R_{n-1}) / dt`` is appended to the history and the
field ``E_rr(t_n) = int_0^{t_n} K(t_n - s) dR/ds ds`` is formed with the
trapezoid rule. ``E_rr`` is then held fixed over the RK4 step to ``t_{n+1}``
while ``-q x E_rr`` is added to the instantaneous potential.

The history sum is split into blocks: contributions from finished blocks are
obtained once per block by FFT convolution, the current block is summed
directly. With ``block_size >= n_steps + 1`` this degenerates to the plain
O(n^2) direct sum, which serves as the reference path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.signal import fftconvolve

from .environment import MemoryKernel
from .errors import ConfigurationError, StabilityError
from .grid import Grid1D, ParticleSpec, Wavefunction, build_hamiltonian, kinetic_coefficients, split_weights
from .potentials import DeltaKick, PotentialSpec, decompose

logger = logging.getLogger(__name__)

NORM_DRIFT_TOL = 1e-6
DEFAULT_BLOCK = 4096


@dataclass(frozen=True)
class PropagationConfig:
    dt: float
    n_steps: int
    record_stride: int = 10
    kick: Optional[DeltaKick] = None
    deform: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be >= 1")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt


@dataclass
class DipoleTrace:
    """Dipole history at every time step.

    ``Rdot`` holds central differences (second-order one-sided at the ends).
    The propagator itself convolves the trailing difference
    ``(R_n - R_{n-1}) / dt`` with ``Rdot_0 = 0``, exposed as ``causal_rdot``.
    """

    times: np.ndarray
    R: np.ndarray
    Rdot: np.ndarray

    @classmethod
    def from_dipole(cls, times, R) -> "DipoleTrace":
        times = np.asarray(times, dtype=float)
        R = np.asarray(R, dtype=float)
        if len(R) > 2:
            Rdot = np.gradient(R, times[1] - times[0], edge_order=2)
        elif len(R) == 2:
            Rdot = np.full(2, (R[1] - R[0]) / (times[1] - times[0]))
        else:
            Rdot = np.zeros_like(R)
        return cls(times, R, Rdot)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def causal_rdot(self) -> np.ndarray:
        out = np.zeros_like(self.R)
        out[1:] = np.diff(self.R) / self.dt
        return out


@dataclass
class Observables:
    """Quantities recorded every ``record_stride`` steps."""

    times: np.ndarray
    norm: np.ndarray
    pop_left: np.ndarray
    pop_right: np.ndarray
    e_rr: np.ndarray
    energy: np.ndarray
    final_state: Wavefunction = field(repr=False)
    e_rr_full: np.ndarray = field(repr=False, default=None)

    @property
    def pop_difference(self) -> np.ndarray:
        return self.pop_left - self.pop_right


class TimeDependentHamiltonian:
    """Static kinetic operator plus a sum of potential contributions.

    Each contribution is a potential spec whose time dependence is carried by
    separable ``profile(t) * shape(x)`` terms.
    """

    def __init__(self, grid: Grid1D, particle: ParticleSpec, potentials: Sequence[PotentialSpec]):
        self.grid = grid
        self.particle = particle
        self.potentials = tuple(potentials)
        static = np.zeros(grid.n_points)
        terms = []
        for spec in self.potentials:
            s, t = decompose(spec, grid)
            static = static + s
            terms.extend(t)
        self.static = static
        self.terms = terms

    def potential(self, t: float) -> np.ndarray:
        out = self.static.copy()
        for shape, profile in self.terms:
            out = out + profile(t) * shape
        return out

    def matrix(self, t: float = 0.0):
        return build_hamiltonian(self.grid, self.particle, self.potential(t))

    def frozen(self, t: float = 0.0) -> "TimeDependentHamiltonian":
        """Copy with every time-dependent term fixed at its value at ``t``."""
        out = TimeDependentHamiltonian(self.grid, self.particle, ())
        out.static = self.potential(t)
        out.terms = []
        return out

    def with_kick(self, kick: DeltaKick | None) -> "TimeDependentHamiltonian":
        if kick is None:
            return self
        out = TimeDependentHamiltonian(self.grid, self.particle, ())
        out.static = self.static.copy()
        _, kick_terms = decompose(kick, self.grid)
        out.terms = list(self.terms) + kick_terms
        out.potentials = self.potentials + (kick,)
        return out


def rr_field(kernel: MemoryKernel, trace: DipoleTrace, n: int) -> float:
    """Radiation-reaction field at step ``n`` by the trapezoidal history sum.

    Uses the trailing-difference velocity, so for a trace produced by
    :func:`propagate` this reproduces the field the propagator applied.
    """
    if n >= len(kernel.values):
        raise ConfigurationError(
            f"kernel covers {len(kernel.values)} samples, step {n} needs more"
        )
    if n == 0:
        return 0.0
    weights = np.ones(n + 1)
    weights[0] = weights[-1] = 0.5
    history = trace.causal_rdot[: n + 1]
    return float(trace.dt * np.sum(weights * kernel.values[n::-1] * history))


@numba.njit(cache=True)
def _apply_h(psi, out, c, v):
    n = psi.shape[0]
    for i in range(n):
        acc = (c[2] + v[i]) * psi[i]
        if i >= 2:
            acc += c[0] * psi[i - 2]
        if i >= 1:
            acc += c[1] * psi[i - 1]
        if i + 1 < n:
            acc += c[3] * psi[i + 1]
        if i + 2 < n:
            acc += c[4] * psi[i + 2]
        out[i] = acc


@numba.njit(cache=True)
def _potential_at(v, v_static, shapes, coefs, k, field_term, x):
    n = v.shape[0]
    for i in range(n):
        acc = v_static[i] + field_term * x[i]
        for j in range(shapes.shape[0]):
            acc += coefs[j, k] * shapes[j, i]
        v[i] = acc


@numba.njit(cache=True)
def _run_block(psi, c, v_static, shapes, coefs, x, charge, dx, dt,
               kernel, rdot, R, E, hist, start, stop, n_steps, use_kernel,
               stride, rec_norm, rec_left, rec_right, rec_energy, left_w, right_w):
    n_pts = psi.shape[0]
    v = np.empty(n_pts)
    hpsi = np.empty(n_pts, dtype=np.complex128)
    tmp = np.empty(n_pts, dtype=np.complex128)
    k1 = np.empty(n_pts, dtype=np.complex128)
    k2 = np.empty(n_pts, dtype=np.complex128)
    k3 = np.empty(n_pts, dtype=np.complex128)
    k4 = np.empty(n_pts, dtype=np.complex128)
    for n in range(start, stop):
        rho_x = 0.0
        for i in range(n_pts):
            rho_x += x[i] * (psi[i].real ** 2 + psi[i].imag ** 2)
        R[n] = charge * rho_x * dx
        if n > 0:
            rdot[n] = (R[n] - R[n - 1]) / dt
        else:
            rdot[n] = 0.0
        e = 0.0
        if use_kernel and n > 0:
            acc = hist[n - start]
            for m in range(start, n + 1):
                acc += kernel[n - m] * rdot[m]
            acc -= 0.5 * kernel[n] * rdot[0] + 0.5 * kernel[0] * rdot[n]
            e = dt * acc
        E[n] = e
        field_term = -charge * e
        k0 = 2 * (n - start)

        if n % stride == 0:
            r = n // stride
            nrm = 0.0
            left = 0.0
            right = 0.0
            for i in range(n_pts):
                d = psi[i].real ** 2 + psi[i].imag ** 2
                nrm += d
                left += left_w[i] * d
                right += right_w[i] * d
            rec_norm[r] = np.sqrt(nrm * dx)
            rec_left[r] = left
            rec_right[r] = right
            _potential_at(v, v_static, shapes, coefs, k0, 0.0, x)
            _apply_h(psi, hpsi, c, v)
            en = 0.0
            for i in range(n_pts):
                en += (psi[i].conjugate() * hpsi[i]).real
            rec_energy[r] = en * dx

        if n >= n_steps:
            break

        _potential_at(v, v_static, shapes, coefs, k0, field_term, x)
        _apply_h(psi, hpsi, c, v)
        for i in range(n_pts):
            k1[i] = -1j * hpsi[i]
            tmp[i] = psi[i] + 0.5 * dt * k1[i]
        _potential_at(v, v_static, shapes, coefs, k0 + 1, field_term, x)
        _apply_h(tmp, hpsi, c, v)
        for i in range(n_pts):
            k2[i] = -1j * hpsi[i]
            tmp[i] = psi[i] + 0.5 * dt * k2[i]
        _apply_h(tmp, hpsi, c, v)
        for i in range(n_pts):
            k3[i] = -1j * hpsi[i]
            tmp[i] = psi[i] + dt * k3[i]
        _potential_at(v, v_static, shapes, coefs, k0 + 2, field_term, x)
        _apply_h(tmp, hpsi, c, v)
        for i in range(n_pts):
            k4[i] = -1j * hpsi[i]
            psi[i] = psi[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def propagate(
    psi0: Wavefunction,
    hamiltonian: TimeDependentHamiltonian,
    kernel: MemoryKernel | None,
    config: PropagationConfig,
    block_size: int | None = DEFAULT_BLOCK,
) -> tuple[DipoleTrace, Observables]:
    """Integrate ``i dpsi/dt = H(t) psi`` with radiation reaction.

    Parameters
    ----------
    psi0 : Wavefunction
        Normalised initial state (copied, not modified).
    hamiltonian : TimeDependentHamiltonian
        Emitter Hamiltonian; ``config.kick`` is added on top and
        ``config.deform=False`` freezes it at ``t=0``.
    kernel : MemoryKernel or None
        Memory kernel sampled at ``config.dt``; ``None`` means no cavity.
    config : PropagationConfig
    block_size : int or None
        History block length for the FFT-accelerated convolution;
        ``None`` selects the direct O(n^2) sum.

    Returns
    -------
    trace : DipoleTrace
        ``R`` and ``dR/dt`` at every step.
    observables : Observables
        Norm, side populations, ``E_rr`` and energy every ``record_stride`` steps.

    Raises
    ------
    StabilityError
        If the norm drifts by more than 1e-6.
    """
    grid = psi0.grid
    n_steps, dt, stride = config.n_steps, config.dt, config.record_stride
    if abs(psi0.norm() - 1.0) > 1e-8:
        raise ConfigurationError(f"initial state is not normalised (norm {psi0.norm():.12f})")

    ham = hamiltonian if config.deform else hamiltonian.frozen(0.0)
    ham = ham.with_kick(config.kick)

    if kernel is None:
        kernel_values = np.zeros(1)
        use_kernel = False
    else:
        if len(kernel.values) < n_steps + 1:
            raise ConfigurationError(
                f"kernel has {len(kernel.values)} samples but the run needs {n_steps + 1}"
            )
        if len(kernel.values) > 1 and abs(kernel.dt - dt) > 1e-9 * dt:
            raise ConfigurationError(f"kernel sampled at dt={kernel.dt}, propagation uses {dt}")
        kernel_values = np.ascontiguousarray(kernel.values[: n_steps + 1], dtype=float)
        use_kernel = not kernel.is_zero()

    psi = psi0.amplitudes.astype(np.complex128).copy()
    c = kinetic_coefficients(grid, hamiltonian.particle)
    x = grid.x.copy()
    charge = float(hamiltonian.particle.charge)
    left_w, right_w = split_weights(grid)
    shapes = np.array([s for s, _ in ham.terms], dtype=float).reshape(len(ham.terms), grid.n_points)

    R = np.zeros(n_steps + 1)
    rdot = np.zeros(n_steps + 1)
    E = np.zeros(n_steps + 1)
    n_rec = n_steps // stride + 1
    rec_norm = np.zeros(n_rec)
    rec_left = np.zeros(n_rec)
    rec_right = np.zeros(n_rec)
    rec_energy = np.zeros(n_rec)

    total = n_steps + 1
    block = total if (block_size is None or not use_kernel) else max(int(block_size), 1)
    for start in range(0, total, block):
        stop = min(start + block, total)
        half_times = start * dt + 0.5 * dt * np.arange(2 * (stop - start) + 1)
        coefs = np.array(
            [np.asarray(profile(half_times), dtype=float) for _, profile in ham.terms]
        ).reshape(len(ham.terms), len(half_times))
        if use_kernel and start > 0:
            hist = fftconvolve(rdot[:start], kernel_values[:stop])[start:stop]
        else:
            hist = np.zeros(stop - start)
        _run_block(
            psi, c, ham.static, shapes, coefs, x, charge, grid.spacing, dt,
            kernel_values, rdot, R, E, hist, start, stop, n_steps, use_kernel,
            stride, rec_norm, rec_left, rec_right, rec_energy, left_w, right_w,
        )
        done = (stop - 1) // stride + 1
        drift = np.abs(rec_norm[:done] - 1.0).max()
        if not np.isfinite(drift) or drift > NORM_DRIFT_TOL:
            raise StabilityError(
                f"norm drift {drift:.3e} exceeds {NORM_DRIFT_TOL:g} by t={stop * dt:.6g} a.u.; "
                "reduce dt"
            )

    times = np.arange(total) * dt
    trace = DipoleTrace.from_dipole(times, R)
    rec_idx = np.arange(n_rec) * stride
    observables = Observables(
        times=times[rec_idx],
        norm=rec_norm,
        pop_left=rec_left,
        pop_right=rec_right,
        e_rr=E[rec_idx],
        energy=rec_energy,
        final_state=Wavefunction(psi, grid),
        e_rr_full=E,
    )
    return trace, observables


__all__ = [
    "DipoleTrace",
    "Observables",
    "PropagationConfig",
    "TimeDependentHamiltonian",
    "propagate",
    "rr_field",
]
