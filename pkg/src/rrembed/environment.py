"""Cavity Green functions, ensemble susceptibilities and the memory kernel.

Everything lives in the scalar single-polarisation picture: the transverse
Green tensor collapses to ``g(w)`` contracted with the cavity polarisation.
The bare cavity follows from a damped mode sum sampled in time, the ensemble
enters through the Dyson equation

    g(w) = (1/g0(w) - (w/c)^2 V_E chi_E(w))^-1

and the emitter feels ``E_rr = K * dR/dt`` with ``K = mu0 F^-1[i w g]``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import find_peaks

from . import fourier
from .errors import (
    ConfigurationError,
    ConventionError,
    PoleOnGridError,
    SingularDensityError,
    UnderResolvedError,
)
from .units import EPSILON0, HARTREE_EV, MU0, SPEED_OF_LIGHT

logger = logging.getLogger(__name__)

# relative size of a negative lobe in Im g0 that signals truncation ripples
SIGN_FLIP_TOL = 1e-3
POLE_TOL = 1e-14
CM_TOL = 1e-6


@dataclass(frozen=True)
class CavitySpec:
    """Lossy Fabry-Perot cavity seen at the emitter position.

    Modes are ``omega_c, 2 omega_c, ...`` up to ``n_modes``; ``eta`` is the
    amplitude decay rate and ``volume`` the mode volume (bohr^3).
    """

    omega_c: float
    eta: float
    volume: float
    n_modes: int = 1

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ConfigurationError("cavity omega_c must be positive")
        if self.eta < 0:
            raise ConfigurationError("cavity eta must be non-negative")
        if not self.volume > 0:
            raise ConfigurationError("cavity volume must be positive")
        if self.n_modes < 1:
            raise ConfigurationError("cavity needs at least one mode")

    @property
    def mode_frequencies(self) -> np.ndarray:
        return self.omega_c * np.arange(1, self.n_modes + 1)

    @staticmethod
    def volume_for_coupling(g_ratio: float, omega_c: float, transition_dipole: float) -> float:
        """Mode volume giving ``g0 = g_ratio * omega_c`` for a dipole ``d01``.

        Uses ``g0 = d01 sqrt(omega_c / (eps0 V))``.
        """
        if not g_ratio > 0:
            raise ConfigurationError("g_ratio must be positive to define a volume")
        g0 = g_ratio * omega_c
        return transition_dipole**2 * omega_c / (EPSILON0 * g0**2)

    def coupling(self, transition_dipole: float) -> float:
        return abs(transition_dipole) * math.sqrt(self.omega_c / (EPSILON0 * self.volume))

    @property
    def prefactor(self) -> float:
        """Mode-sum weight ``2 c^2 / V`` of the bare Green function."""
        return 2.0 * SPEED_OF_LIGHT**2 / self.volume


@dataclass(frozen=True)
class SpectralGrid:
    """Time/frequency sampling shared by Green function and kernel.

    The Green function is built on ``n_fft`` samples spaced
    ``kernel_stride * dt`` that span at least ``oversampling * n_steps * dt``,
    which sets ``domega = 2 pi / (n_fft * kernel_stride * dt)``.
    """

    dt: float
    n_steps: int
    oversampling: int = 1
    kernel_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be >= 1")
        if self.oversampling < 1 or int(self.oversampling) != self.oversampling:
            raise ConfigurationError("oversampling must be an integer >= 1")
        if self.kernel_stride < 1 or int(self.kernel_stride) != self.kernel_stride:
            raise ConfigurationError("kernel_stride must be an integer >= 1")

    @property
    def coarse_dt(self) -> float:
        return self.dt * self.kernel_stride

    @property
    def n_fft(self) -> int:
        span = self.oversampling * self.n_steps
        return fourier.fast_length(math.ceil(span / self.kernel_stride) + 1)

    @property
    def domega(self) -> float:
        return 2.0 * math.pi / (self.n_fft * self.coarse_dt)

    @property
    def omega(self) -> np.ndarray:
        return fourier.frequencies(self.n_fft, self.coarse_dt)

    @property
    def coarse_times(self) -> np.ndarray:
        return np.arange(self.n_fft) * self.coarse_dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class DrudeLorentz:
    """Ensemble response with ``V_E chi_E = V N omega_p^2 / (omega_0^2 - w^2 - i gamma w)``.

    The product ``V_E chi_E`` is parametrised directly, so ``volume_ratio``
    (``V_E / V``) only matters when ``chi_E`` itself is wanted.
    """

    omega_p: float
    omega_0: float
    gamma: float
    n_ensemble: float
    volume_ratio: float = 1.0

    def __post_init__(self):
        if self.gamma < 0 or self.omega_p < 0:
            raise ConfigurationError("Drude-Lorentz gamma and omega_p must be non-negative")
        if self.n_ensemble < 0:
            raise ConfigurationError("n_ensemble must be non-negative")
        if not self.volume_ratio > 0:
            raise ConfigurationError("volume_ratio must be positive")

    def chi(self, omega, volume: float):
        """Bare susceptibility ``chi_E`` for a cavity of ``volume``."""
        return chi_drude_lorentz(self, omega, volume) / (self.volume_ratio * volume)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Ensemble response built from a sampled molecular polarizability."""

    omega: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    n_ensemble: float
    v_e: float
    dilute: bool = True

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        alpha = np.asarray(self.alpha, dtype=complex)
        if omega.ndim != 1 or omega.shape != alpha.shape:
            raise ConfigurationError("tabulated omega and alpha must be 1D arrays of equal length")
        if np.any(np.diff(omega) <= 0):
            raise ConfigurationError("tabulated omega must be strictly increasing")
        if not self.v_e > 0:
            raise ConfigurationError("ensemble volume V_E must be positive")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "alpha", alpha)
        if np.any(alpha.imag * omega < -1e-8 * np.abs(alpha).max(initial=0.0)):
            logger.warning("tabulated polarizability has emissive (Im alpha * w < 0) samples")

    def density_factor(self, alpha):
        return self.n_ensemble * alpha / (self.v_e * EPSILON0)


SusceptibilityModel = Optional[Union[DrudeLorentz, Tabulated]]


def chi_drude_lorentz(model: DrudeLorentz, omega, volume: float):
    """Return ``V_E chi_E(w)`` of a Drude-Lorentz ensemble in a cavity of ``volume``."""
    omega = np.asarray(omega, dtype=float)
    return volume * model.n_ensemble * model.omega_p**2 / (
        model.omega_0**2 - omega**2 - 1j * model.gamma * omega
    )


def chi_from_polarizability(omega, alpha, n_e: float, v_e: float, dilute: bool = True) -> Tabulated:
    """Ensemble susceptibility from a single-molecule polarizability.

    ``dilute=True`` gives ``chi_E = N alpha / (V_E eps0)``; otherwise the
    Clausius-Mossotti local-field form ``x / (1 - x/3)`` with the same ``x``.
    """
    model = Tabulated(omega, alpha, n_e, v_e, dilute)
    if not dilute:
        _clausius_mossotti(model.density_factor(model.alpha))
    return model


def _clausius_mossotti(x):
    denom = 1.0 - x / 3.0
    if np.any(np.abs(denom) < CM_TOL):
        raise SingularDensityError(
            "Clausius-Mossotti denominator vanishes; ensemble density too high for this polarizability"
        )
    return x / denom


def interpolate_alpha(model: Tabulated, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    outside = (omega < model.omega[0]) | (omega > model.omega[-1])
    if np.any(outside):
        logger.warning(
            "%d frequencies fall outside the tabulated range [%g, %g] Ha; alpha set to 0 there",
            int(outside.sum()), model.omega[0], model.omega[-1],
        )
    re = np.interp(omega, model.omega, model.alpha.real, left=0.0, right=0.0)
    im = np.interp(omega, model.omega, model.alpha.imag, left=0.0, right=0.0)
    return re + 1j * im


def embedded_response(chi: SusceptibilityModel, omega, volume: float) -> np.ndarray:
    """``V_E chi_E(w)`` for any susceptibility model (zero for ``None``)."""
    omega = np.asarray(omega, dtype=float)
    if chi is None:
        return np.zeros(omega.shape, dtype=complex)
    if isinstance(chi, DrudeLorentz):
        return chi_drude_lorentz(chi, omega, volume)
    if isinstance(chi, Tabulated):
        x = chi.density_factor(interpolate_alpha(chi, omega))
        if not chi.dilute:
            x = _clausius_mossotti(x)
        return chi.v_e * x
    raise TypeError(f"unknown susceptibility model {type(chi).__name__}")


@dataclass
class GreenFunction:
    """Scalar Green function on the non-negative half of the spectral grid."""

    omega: np.ndarray
    values: np.ndarray
    volume: float
    # high-frequency tail: g ~ -tail / w^2, the slope of F^-1[g] at t = 0+
    tail: float = 0.0

    def pole_frequencies(self, omega_min: float = 0.0, omega_max: float = np.inf, count: int | None = None):
        """Peak positions of ``Im g`` (parabolic refinement), ascending.

        With ``count`` only the ``count`` highest peaks are kept.
        """
        mask = (self.omega >= omega_min) & (self.omega <= omega_max)
        idx = np.flatnonzero(mask)
        spec = self.values.imag[idx]
        peaks, props = find_peaks(spec, height=0.0)
        if count is not None and len(peaks) > count:
            order = np.argsort(props["peak_heights"])[::-1][:count]
            peaks = np.sort(peaks[order])
        out = []
        dw = self.omega[1] - self.omega[0]
        for p in peaks:
            if 0 < p < len(spec) - 1:
                a, b, c = spec[p - 1], spec[p], spec[p + 1]
                denom = a - 2 * b + c
                shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
            else:
                shift = 0.0
            out.append(self.omega[idx[p]] + shift * dw)
        return np.array(out)


@dataclass
class MemoryKernel:
    """Radiation-reaction kernel ``K(t_n)`` on the propagation time axis."""

    times: np.ndarray
    values: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @classmethod
    def zeros(cls, n_steps: int, dt: float) -> "MemoryKernel":
        return cls(np.arange(n_steps + 1) * dt, np.zeros(n_steps + 1))

    def is_zero(self) -> bool:
        return not np.any(self.values)


def damped_mode_sum(cavity: CavitySpec, times: np.ndarray) -> np.ndarray:
    """``(2c^2/V) exp(-eta t) sum_k sin(w_k t)/w_k`` sampled at ``times``."""
    total = np.zeros_like(times)
    for wk in cavity.mode_frequencies:
        total += np.sin(wk * times) / wk
    total *= np.exp(-cavity.eta * times)
    total *= cavity.prefactor
    return total


def bare_green(cavity: CavitySpec, sgrid: SpectralGrid, check: bool = True) -> GreenFunction:
    """Bare cavity Green function from the time-sampled damped mode sum.

    Raises
    ------
    UnderResolvedError
        If ``Im g0`` changes sign near a resonance, the signature of a
        spectral window too short for the cavity lifetime.
    """
    samples = damped_mode_sum(cavity, sgrid.coarse_times)
    values = fourier.forward(samples, sgrid.coarse_dt)
    g0 = GreenFunction(sgrid.omega, values, cavity.volume, cavity.prefactor * cavity.n_modes)
    if check:
        _check_sign(g0, cavity, sgrid)
    return g0


def _check_sign(g0: GreenFunction, cavity: CavitySpec, sgrid: SpectralGrid):
    nyquist = math.pi / sgrid.coarse_dt
    top = min(0.5 * nyquist, 3.0 * cavity.mode_frequencies[-1])
    band = (g0.omega > 0) & (g0.omega <= top)
    im = g0.values.imag[band]
    if im.size == 0:
        return
    worst = int(np.argmin(im))
    if im[worst] < -SIGN_FLIP_TOL * im.max():
        w = g0.omega[band][worst]
        wk = cavity.mode_frequencies[np.argmin(np.abs(cavity.mode_frequencies - w))]
        raise UnderResolvedError(
            f"Im g0 changes sign near the resonance at {wk * HARTREE_EV:.6g} eV "
            f"(window {sgrid.n_fft * sgrid.coarse_dt:.4g} a.u., eta*T = "
            f"{cavity.eta * sgrid.n_fft * sgrid.coarse_dt:.3g}); increase oversampling"
        )


def tail_images(omega: np.ndarray, dt: float, tail: float) -> np.ndarray:
    """Folded images of a ``-tail/w^2`` tail in a transform sampled at ``dt``.

    Sampling in time adds ``sum_{p != 0} g(w + p ws)`` to the transform;
    for the tail this is ``-(tail/ws^2) (pi^2/sin^2(pi x) - 1/x^2)`` with
    ``x = w/ws``.
    """
    ws = 2.0 * math.pi / dt
    x = omega / ws
    out = np.full(omega.shape, math.pi**2 / 3.0)
    nz = x > 0
    out[nz] = math.pi**2 / np.sin(math.pi * x[nz]) ** 2 - 1.0 / x[nz] ** 2
    return -tail / ws**2 * out


def dress_green(g0: GreenFunction, chi: SusceptibilityModel, sgrid: SpectralGrid | None = None) -> GreenFunction:
    """Dyson dressing of ``g0`` by an embedded ensemble.

    With ``chi=None`` or a vanishing response the input is returned
    unchanged. When ``sgrid`` is given, the sampling images of the bare
    ``1/w^2`` tail are removed before inverting and restored afterwards, so
    the dressed values are those of a sampled dressed response rather than a
    dressed sampled one (the difference shifts poles at O((w dt)^2)).
    """
    omega = g0.omega
    response = embedded_response(chi, omega, g0.volume)
    if not np.any(response):
        return GreenFunction(omega, g0.values.copy(), g0.volume, g0.tail)
    images = 0.0
    if sgrid is not None and g0.tail:
        images = tail_images(omega, sgrid.coarse_dt, g0.tail)
    inverse = 1.0 / (g0.values - images) - (omega / SPEED_OF_LIGHT) ** 2 * response
    bad = np.abs(inverse) < POLE_TOL
    if np.any(bad):
        w = omega[np.argmax(bad)]
        raise PoleOnGridError(
            f"dressed Green function has a pole on the grid at {w * HARTREE_EV:.6g} eV; "
            "raise eta or the spectral resolution"
        )
    # the ensemble only shifts g at O(1/w^4), so the tail is unchanged
    return GreenFunction(omega, 1.0 / inverse + images, g0.volume, g0.tail)


def _check_hermitian(g: GreenFunction, n_fft: int):
    scale = np.abs(g.values).max(initial=0.0)
    if scale == 0:
        return
    endpoints = [g.values[0]]
    if n_fft % 2 == 0:
        endpoints.append(g.values[-1])
    worst = max(abs(v.imag) for v in endpoints)
    if worst > 1e-8 * scale:
        raise ConventionError(
            f"Green function is not Hermitian-extendable (Im g at w=0/Nyquist = {worst:.3e}); "
            "check the Fourier convention"
        )


def _derivative(f: np.ndarray, h: float, count: int) -> np.ndarray:
    """4th-order derivative of causal samples at indices ``0..count-1``.

    Central differences from index 2 on; one-sided forward stencils at 0 and 1
    so that ``K(0)`` is the right limit ``K(0+)``.
    """
    count = min(count, len(f) - 2)
    d = np.empty(count)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    j = np.arange(2, count)
    d[2:] = (-f[j + 2] + 8 * f[j + 1] - 8 * f[j - 1] + f[j - 2]) / (12 * h)
    return d


def kernel_from_green(g: GreenFunction, sgrid: SpectralGrid) -> MemoryKernel:
    """Memory kernel ``K(t) = -mu0 d/dt F^-1[g](t)`` on the propagation axis."""
    n_fft = sgrid.n_fft
    if len(g.values) != n_fft // 2 + 1:
        raise ConfigurationError("Green function was not built on this spectral grid")
    _check_hermitian(g, n_fft)
    response = fourier.inverse(g.values, sgrid.coarse_dt, n_fft)
    stride = sgrid.kernel_stride
    n_coarse = math.ceil(sgrid.n_steps / stride) + 4
    if n_coarse + 2 > n_fft:
        raise ConfigurationError("spectral grid is shorter than the propagation window")
    coarse = -MU0 * _derivative(response, sgrid.coarse_dt, n_coarse)
    if stride == 1:
        values = coarse[: sgrid.n_steps + 1]
    else:
        spline = CubicSpline(np.arange(len(coarse)) * sgrid.coarse_dt, coarse)
        values = spline(sgrid.times)
    return MemoryKernel(sgrid.times.copy(), np.ascontiguousarray(values))


def _alias_tail(omega: np.ndarray, dt: float, tail: float) -> np.ndarray:
    """Aliasing error of ``i w g`` on a sampled grid from a ``-tail/w^2`` tail.

    Multiplying the discrete transform by ``i w`` misses the folded images
    ``i p ws g(w + p ws)``; summed over ``p != 0`` they give
    ``(i tail/ws) (pi cot(pi x) - pi^2 x / sin^2(pi x))`` with ``x = w/ws``.
    """
    ws = 2.0 * math.pi / dt
    x = omega / ws
    out = np.zeros(omega.shape, dtype=complex)
    nz = x > 0
    px = math.pi * x[nz]
    out[nz] = 1j * tail / ws * (math.pi / np.tan(px) - math.pi * px / np.sin(px) ** 2)
    return out


def kernel_direct(g: GreenFunction, sgrid: SpectralGrid, alias_correction: bool = True) -> MemoryKernel:
    """Kernel from the direct transform ``mu0 F^-1[i w g]`` (no differentiation).

    The kernel jumps at ``t = 0+``, so the raw discrete transform rings with
    an envelope decaying only like ``1/t``. With ``alias_correction`` the
    folded images of the known ``1/w^2`` tail are removed analytically, after
    which the result matches :func:`kernel_from_green`.
    """
    _check_hermitian(g, sgrid.n_fft)
    spectrum = 1j * g.omega * g.values
    if alias_correction:
        spectrum = spectrum - _alias_tail(g.omega, sgrid.coarse_dt, g.tail)
    coarse = MU0 * fourier.inverse(spectrum, sgrid.coarse_dt, sgrid.n_fft)
    n_coarse = math.ceil(sgrid.n_steps / sgrid.kernel_stride) + 4
    coarse = coarse[:n_coarse]
    if alias_correction:
        # the series converges to the midpoint of the jump from K(0-) = 0
        coarse[0] *= 2.0
    if sgrid.kernel_stride == 1:
        values = coarse[: sgrid.n_steps + 1]
    else:
        values = CubicSpline(np.arange(len(coarse)) * sgrid.coarse_dt, coarse)(sgrid.times)
    return MemoryKernel(sgrid.times.copy(), np.ascontiguousarray(values))


def cavity_kernel(cavity: CavitySpec | None, chi: SusceptibilityModel, sgrid: SpectralGrid) -> MemoryKernel:
    """Bare -> dressed -> kernel in one call; ``cavity=None`` gives a zero kernel."""
    if cavity is None:
        return MemoryKernel.zeros(sgrid.n_steps, sgrid.dt)
    g = dress_green(bare_green(cavity, sgrid), chi, sgrid)
    return kernel_from_green(g, sgrid)


def load_polarizability(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a tabulated polarizability, returning ``(omega [Ha], alpha [a.u.])``.

    Text files hold three columns ``omega, Re alpha, Im alpha`` with optional
    ``# key: value`` header lines; JSON files hold
    ``{"omega_ev": [...], "re": [...], "im": [...]}``. The ``omega_unit``
    header key (``eV`` default, or ``Ha``) declares the frequency unit.
    """
    path = Path(path)
    text = path.read_text()
    header = {}
    if path.suffix.lower() == ".json":
        record = json.loads(text)
        header = dict(record.get("units", {}))
        if "omega_ev" in record:
            omega = np.asarray(record["omega_ev"], dtype=float)
            header.setdefault("omega_unit", "eV")
        else:
            omega = np.asarray(record["omega"], dtype=float)
        alpha = np.asarray(record["re"], dtype=float) + 1j * np.asarray(record["im"], dtype=float)
    else:
        rows = []
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                key, sep, value = stripped.lstrip("#").partition(":")
                if sep:
                    header[key.strip()] = value.strip()
                continue
            rows.append([float(v) for v in stripped.replace(",", " ").split()])
        data = np.asarray(rows, dtype=float)
        if data.ndim != 2 or data.shape[1] != 3:
            raise ConfigurationError(f"{path}: expected three columns (omega, Re alpha, Im alpha)")
        omega, alpha = data[:, 0], data[:, 1] + 1j * data[:, 2]
    unit = header.get("omega_unit", "eV")
    if unit.lower() == "ev":
        omega = omega / HARTREE_EV
    elif unit.lower() not in ("ha", "hartree", "au", "a.u."):
        raise ConfigurationError(f"{path}: unknown omega_unit {unit!r}")
    return omega, alpha


__all__ = [
    "CavitySpec",
    "DrudeLorentz",
    "GreenFunction",
    "MemoryKernel",
    "SpectralGrid",
    "SusceptibilityModel",
    "Tabulated",
    "bare_green",
    "cavity_kernel",
    "chi_drude_lorentz",
    "chi_from_polarizability",
    "damped_mode_sum",
    "dress_green",
    "embedded_response",
    "kernel_direct",
    "kernel_from_green",
    "load_polarizability",
    "tail_images",
]
