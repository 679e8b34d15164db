"""Hopfield-type cross-check: cavity + N identical emitters + one molecule.

In the single-excitation manifold under the rotating-wave approximation the
Hamiltonian is an arrowhead matrix. Identical ensemble members couple to the
cavity only through their symmetric (bright) combination, leaving N-1 dark
states at the bare ensemble energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PHOTON, BRIGHT, MOLECULE = 0, 1, 2


@dataclass(frozen=True)
class HopfieldSpec:
    omega_c: float
    omega_E: float
    omega_m: float
    g: float
    g_m: float
    N: int

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if min(self.omega_c, self.omega_E, self.omega_m) <= 0:
            raise ValueError("energies must be positive")


def build_arrowhead(spec: HopfieldSpec) -> np.ndarray:
    """Full ``(N+2) x (N+2)`` matrix ordered (photon, emitters..., molecule)."""
    n = spec.N + 2
    H = np.zeros((n, n))
    H[0, 0] = spec.omega_c
    idx = np.arange(1, spec.N + 1)
    H[idx, idx] = spec.omega_E
    H[-1, -1] = spec.omega_m
    H[0, idx] = H[idx, 0] = spec.g
    H[0, -1] = H[-1, 0] = spec.g_m
    return H


def bright_dark_reduce(spec: HopfieldSpec) -> tuple[np.ndarray, int]:
    """Bright 3x3 block ordered (bright ensemble, photon, molecule) and dark count."""
    if spec.N < 1:
        raise ValueError("bright/dark reduction needs at least one ensemble emitter")
    gn = spec.g * math.sqrt(spec.N)
    block = np.array([
        [spec.omega_E, gn, 0.0],
        [gn, spec.omega_c, spec.g_m],
        [0.0, spec.g_m, spec.omega_m],
    ])
    return block, spec.N - 1


def reduced_spectrum(spec: HopfieldSpec) -> np.ndarray:
    """Bright eigenvalues joined with the (N-1)-fold dark energy, ascending."""
    block, n_dark = bright_dark_reduce(spec)
    return np.sort(np.concatenate([np.linalg.eigvalsh(block), np.full(n_dark, spec.omega_E)]))


def polariton_weights(matrix: np.ndarray, layout: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and (photon, bright ensemble, molecule) weights per eigenvector.

    ``layout`` is ``"bright"`` for a 3x3 block from :func:`bright_dark_reduce`
    or ``"arrowhead"`` for a full matrix from :func:`build_arrowhead`; by
    default 3x3 inputs are taken as bright blocks. Rows of the returned weights
    correspond to ascending eigenvalues and sum to one.
    """
    matrix = np.asarray(matrix, dtype=float)
    if not np.allclose(matrix, matrix.T):
        raise ValueError("matrix must be symmetric")
    if layout is None:
        layout = "bright" if matrix.shape == (3, 3) else "arrowhead"
    energies, vectors = np.linalg.eigh(matrix)
    sq = vectors.T**2
    if layout == "bright":
        weights = sq[:, [1, 0, 2]]
    elif layout == "arrowhead":
        weights = np.column_stack([sq[:, 0], sq[:, 1:-1].sum(axis=1), sq[:, -1]])
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return energies, weights


def sweep_bright(omega_c, omega_E, omega_m, g, g_m, n_values):
    """Bright-block eigenvalues and weights over ensemble sizes, for plots."""
    rows = []
    for n in n_values:
        block, _ = bright_dark_reduce(HopfieldSpec(omega_c, omega_E, omega_m, g, g_m, int(n)))
        energies, weights = polariton_weights(block, "bright")
        rows.append((int(n), energies, weights))
    return rows
