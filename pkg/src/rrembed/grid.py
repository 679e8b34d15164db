"""Real-space 1D quantum mechanics on a uniform centered grid.

Wavefunctions are normalised in the continuum sense, ``sum(|psi|**2) * dx == 1``,
so amplitudes carry units of bohr**-1/2 and all integrals are plain
rectangle sums over the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConfigurationError, NumericalError
from .units import ELECTRON_MASS, PROTON_MASS

# 5-point, 4th-order second derivative
STENCIL = np.array([-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0])

RESIDUAL_TOL = 1e-8
ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid centered on x=0, ``x_i = (i - (n-1)/2) * spacing``."""

    n_points: int
    spacing: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 5:
            raise ConfigurationError(
                f"Grid1D needs n_points >= 5 for the 4th-order stencil, got {self.n_points}"
            )
        if not self.spacing > 0:
            raise ConfigurationError(f"Grid1D spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "spacing", float(self.spacing))

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_points) - (self.n_points - 1) / 2.0) * self.spacing

    @property
    def length(self) -> float:
        return (self.n_points - 1) * self.spacing


@dataclass(frozen=True)
class ParticleSpec:
    mass: float = ELECTRON_MASS
    charge: float = -1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigurationError(f"particle mass must be positive, got {self.mass}")
        if not abs(self.charge) > 0:
            raise ConfigurationError("particle charge must be nonzero")

    @classmethod
    def electron(cls) -> "ParticleSpec":
        return cls(ELECTRON_MASS, -1.0)

    @classmethod
    def proton(cls) -> "ParticleSpec":
        return cls(PROTON_MASS, 1.0)


@dataclass
class Wavefunction:
    amplitudes: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise ConfigurationError(
                f"amplitudes have shape {self.amplitudes.shape}, grid has {self.grid.n_points} points"
            )

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.density) * self.grid.spacing))

    def normalized(self) -> "Wavefunction":
        return Wavefunction(self.amplitudes / self.norm(), self.grid)

    def overlap(self, other: "Wavefunction") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.grid.spacing)

    def copy(self) -> "Wavefunction":
        return Wavefunction(self.amplitudes.copy(), self.grid)


@dataclass
class EigenSolution:
    """Lowest eigenpairs of a static Hamiltonian, energies ascending (Hartree)."""

    energies: np.ndarray
    states: list[Wavefunction] = field(repr=False)

    @property
    def ground_state(self) -> Wavefunction:
        return self.states[0]

    def transition_dipole(self, i: int, j: int, particle: ParticleSpec) -> float:
        """Return ``q <i|x|j>`` for real eigenstates."""
        a, b = self.states[i], self.states[j]
        return float(
            particle.charge * np.real(np.vdot(a.amplitudes, a.grid.x * b.amplitudes)) * a.grid.spacing
        )


def kinetic_coefficients(grid: Grid1D, particle: ParticleSpec) -> np.ndarray:
    """Stencil weights of ``-1/(2m) d^2/dx^2`` for offsets -2..2."""
    return -STENCIL / (2.0 * particle.mass * grid.spacing**2)


def build_hamiltonian(grid: Grid1D, particle: ParticleSpec, potential) -> sp.csr_matrix:
    """Finite-difference Hamiltonian with hard-wall boundaries.

    Parameters
    ----------
    grid : Grid1D
    particle : ParticleSpec
    potential : array_like
        Real potential sampled on ``grid.x`` (Hartree).

    Returns
    -------
    scipy.sparse.csr_matrix
        Real symmetric pentadiagonal operator.
    """
    potential = np.asarray(potential, dtype=float)
    if potential.shape != (grid.n_points,):
        raise ConfigurationError(
            f"potential has shape {potential.shape}, expected ({grid.n_points},)"
        )
    coeff = kinetic_coefficients(grid, particle)
    n = grid.n_points
    diagonals = [np.full(n - abs(k), coeff[k + 2]) for k in range(-2, 3)]
    diagonals[2] = diagonals[2] + potential
    return sp.diags(diagonals, offsets=range(-2, 3), format="csr")


def solve_eigenstates(H, k: int, grid: Grid1D) -> EigenSolution:
    """Lowest ``k`` eigenpairs of a banded symmetric Hamiltonian.

    Raises
    ------
    NumericalError
        If any eigenpair misses the residual or orthonormality bound.
    """
    n = H.shape[0]
    if not 1 <= k <= n:
        raise ConfigurationError(f"cannot request {k} eigenstates from a {n}-point operator")
    H = sp.csr_matrix(H)
    bandwidth = 2
    ab = np.zeros((bandwidth + 1, n))
    for off in range(bandwidth + 1):
        ab[bandwidth - off, off:] = H.diagonal(off)
    energies, vectors = scipy.linalg.eig_banded(
        ab, lower=False, select="i", select_range=(0, k - 1)
    )
    # continuum normalisation and a deterministic sign (positive lobe first)
    vectors = vectors / np.sqrt(grid.spacing)
    for j in range(k):
        pivot = np.argmax(np.abs(vectors[:, j]) > 1e-3 * np.abs(vectors[:, j]).max())
        if vectors[pivot, j] < 0:
            vectors[:, j] *= -1

    residual = H @ vectors - vectors * energies
    res_norm = np.sqrt(np.sum(residual**2, axis=0) * grid.spacing)
    overlaps = vectors.T @ vectors * grid.spacing
    ortho = np.abs(overlaps - np.eye(k)).max()
    if res_norm.max() > RESIDUAL_TOL or ortho > ORTHO_TOL:
        raise NumericalError(
            f"eigensolve did not converge: max residual {res_norm.max():.3e}, "
            f"orthonormality error {ortho:.3e}"
        )
    states = [Wavefunction(vectors[:, j].astype(complex), grid) for j in range(k)]
    return EigenSolution(np.asarray(energies), states)


def dipole(psi: Wavefunction, particle: ParticleSpec) -> float:
    """Dipole moment ``q * integral x |psi|^2 dx``."""
    return float(particle.charge * np.sum(psi.grid.x * psi.density) * psi.grid.spacing)


def split_weights(grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Left/right quadrature weights with a point at x=0 shared half-half."""
    x = grid.x
    at_zero = np.abs(x) < 1e-9 * grid.spacing
    left = np.where(at_zero, 0.5, np.where(x < 0, 1.0, 0.0))
    right = 1.0 - left
    return left * grid.spacing, right * grid.spacing


def side_populations(psi: Wavefunction) -> tuple[float, float]:
    left_w, right_w = split_weights(psi.grid)
    rho = psi.density
    return float(np.sum(left_w * rho)), float(np.sum(right_w * rho))


def expectation(H, psi: Wavefunction) -> float:
    return float(np.real(np.vdot(psi.amplitudes, H @ psi.amplitudes)) * psi.grid.spacing)


__all__ = [
    "EigenSolution",
    "Grid1D",
    "ParticleSpec",
    "PROTON_MASS",
    "Wavefunction",
    "build_hamiltonian",
    "dipole",
    "expectation",
    "kinetic_coefficients",
    "side_populations",
    "solve_eigenstates",
    "split_weights",
]
