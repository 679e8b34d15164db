"""Model potentials and time-dependent perturbations.

Every potential can be split into a static part plus a sum of separable
terms ``profile(t) * shape(x)``. The propagator uses that split to avoid
re-evaluating the full potential at every Runge-Kutta stage.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np
from scipy.special import expit

from .grid import Grid1D
from .units import FS_AU


@dataclass(frozen=True)
class SoftCoulomb:
    """``-1 / sqrt(x**2 + softening)``; softening in bohr**2."""

    softening: float = 1.0

    def __post_init__(self):
        if not self.softening > 0:
            raise ValueError("softening must be positive")


@dataclass(frozen=True)
class TiltedDoubleWell:
    """Tilted quartic double well whose quartic term stiffens along a sigmoid.

    ``v(x, t) = c1 x - c2 x^2 + c4 x^4 (1 + amplitude * sigmoid((t - t0) / tau))``
    with coefficients in Hartree and times ``t0``, ``tau`` in atomic units.
    """

    c1: float = 1e-3
    c2: float = 1.25e-3
    c4: float = 1e-4
    amplitude: float = 0.4
    t0: float = 60.0 * FS_AU
    tau: float = 10.0 * FS_AU

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.c4 > 0:
            raise ValueError("c4 must be positive for a confining well")

    def sigmoid(self, t):
        return expit((np.asarray(t, dtype=float) - self.t0) / self.tau)

    def quartic_scale(self, t):
        return 1.0 + self.amplitude * self.sigmoid(t)


@dataclass(frozen=True)
class DeltaKick:
    """Lorentzian-shaped impulse ``-K L(t) x`` with unit-area ``L``."""

    strength: float = 1e-4
    center: float = 1.0
    width: float = 1e-2

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("kick width must be positive")

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        return self.width / (np.pi * ((t - self.center) ** 2 + self.width**2))

    def spectrum(self, omega):
        """Transform of ``K L(t)`` over the whole real line, ``K exp(i w t_k - width |w|)``."""
        omega = np.asarray(omega, dtype=float)
        return self.strength * np.exp(1j * omega * self.center - self.width * np.abs(omega))


@dataclass(frozen=True)
class SampledPotential:
    """Escape hatch: a static potential given directly on the grid."""

    values: tuple

    @classmethod
    def from_array(cls, values) -> "SampledPotential":
        return cls(tuple(float(v) for v in np.asarray(values, dtype=float)))


PotentialSpec = Union[SoftCoulomb, TiltedDoubleWell, DeltaKick, SampledPotential]


def evaluate(spec: PotentialSpec, grid: Grid1D, t: float = 0.0) -> np.ndarray:
    """Sample a potential on ``grid`` at time ``t`` (atomic units)."""
    if t < 0:
        raise ValueError(f"potentials are defined for t >= 0, got {t}")
    static, terms = decompose(spec, grid)
    out = static.copy()
    for shape, profile in terms:
        out = out + profile(t) * shape
    return out


def decompose(spec: PotentialSpec, grid: Grid1D) -> tuple[np.ndarray, list[tuple[np.ndarray, Callable]]]:
    """Split into a static array and ``(shape, profile)`` time-dependent terms."""
    x = grid.x
    if isinstance(spec, SoftCoulomb):
        return -1.0 / np.sqrt(x**2 + spec.softening), []
    if isinstance(spec, TiltedDoubleWell):
        static = spec.c1 * x - spec.c2 * x**2 + spec.c4 * x**4
        shape = spec.c4 * spec.amplitude * x**4
        return static, [(shape, spec.sigmoid)]
    if isinstance(spec, DeltaKick):
        return np.zeros_like(x), [(-spec.strength * x, spec.profile)]
    if isinstance(spec, SampledPotential):
        values = np.asarray(spec.values, dtype=float)
        if values.shape != x.shape:
            raise ValueError(f"sampled potential has {values.size} points, grid has {x.size}")
        return values, []
    raise TypeError(f"unknown potential spec {type(spec).__name__}")


def fast_deformation_variant(base: TiltedDoubleWell | None = None) -> TiltedDoubleWell:
    """Same double well deformed around 5 fs over a 1 fs sigmoid width."""
    base = base or TiltedDoubleWell()
    return replace(base, t0=5.0 * FS_AU, tau=1.0 * FS_AU)


__all__ = [
    "DeltaKick",
    "PotentialSpec",
    "SampledPotential",
    "SoftCoulomb",
    "TiltedDoubleWell",
    "decompose",
    "evaluate",
    "fast_deformation_variant",
]
