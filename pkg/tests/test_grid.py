"""Finite-difference Hamiltonian, eigensolver and grid observables."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rrembed.errors import ConfigurationError
from rrembed.grid import (
    Grid1D,
    ParticleSpec,
    Wavefunction,
    build_hamiltonian,
    dipole,
    expectation,
    side_populations,
    solve_eigenstates,
)

from conftest import harmonic_potential


def test_grid_is_centered():
    g = Grid1D(11, 0.5)
    assert g.x[5] == 0.0
    assert np.allclose(g.x, -g.x[::-1])
    assert g.length == pytest.approx(5.0)


@pytest.mark.parametrize("n, dx", [(4, 0.1), (100, 0.0), (100, -1.0), (10.5, 0.1)])
def test_grid_rejects_bad_input(n, dx):
    with pytest.raises(ConfigurationError):
        Grid1D(n, dx)


def test_particle_validation():
    with pytest.raises(ConfigurationError):
        ParticleSpec(mass=0.0)
    with pytest.raises(ConfigurationError):
        ParticleSpec(charge=0.0)
    assert ParticleSpec.proton().charge == 1.0


def test_harmonic_levels(harmonic_grid, electron):
    # oracle: E_n = (n + 1/2) omega
    H = build_hamiltonian(harmonic_grid, electron, harmonic_potential(harmonic_grid))
    sol = solve_eigenstates(H, 4, harmonic_grid)
    assert np.allclose(sol.energies, [0.5, 1.5, 2.5, 3.5], atol=1e-5)


def test_harmonic_levels_heavy_particle():
    grid = Grid1D(401, 0.01)
    particle = ParticleSpec(mass=50.0)
    H = build_hamiltonian(grid, particle, harmonic_potential(grid, omega=0.2, mass=50.0))
    sol = solve_eigenstates(H, 3, grid)
    assert np.allclose(sol.energies, [0.1, 0.3, 0.5], rtol=1e-6)


def test_harmonic_transition_dipole(harmonic_grid, electron):
    # oracle: <0|x|1> = 1/sqrt(2 m omega)
    H = build_hamiltonian(harmonic_grid, electron, harmonic_potential(harmonic_grid))
    sol = solve_eigenstates(H, 2, harmonic_grid)
    d01 = sol.transition_dipole(0, 1, electron)
    assert abs(d01) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, 21, elements=st.floats(-5.0, 5.0)))
def test_hamiltonian_is_symmetric(v):
    grid = Grid1D(21, 0.3)
    H = build_hamiltonian(grid, ParticleSpec(), v).toarray()
    assert np.array_equal(H, H.T)
    kinetic = np.diag(H) - v
    assert np.allclose(kinetic, kinetic[0], rtol=0, atol=1e-12)


def test_potential_shape_checked(electron):
    grid = Grid1D(21, 0.1)
    with pytest.raises(ConfigurationError):
        build_hamiltonian(grid, electron, np.zeros(20))


def test_eigenstates_orthonormal_with_alternating_parity(harmonic_grid, electron):
    H = build_hamiltonian(harmonic_grid, electron, harmonic_potential(harmonic_grid))
    sol = solve_eigenstates(H, 4, harmonic_grid)
    for i, a in enumerate(sol.states):
        assert a.norm() == pytest.approx(1.0, abs=1e-12)
        for j, b in enumerate(sol.states):
            assert abs(a.overlap(b) - (i == j)) < 1e-10
        mirrored = a.amplitudes[::-1]
        assert np.allclose(mirrored, (-1) ** i * a.amplitudes, atol=1e-10)


def test_eigenstate_count_checked(electron):
    grid = Grid1D(11, 0.1)
    H = build_hamiltonian(grid, electron, np.zeros(11))
    with pytest.raises(ConfigurationError):
        solve_eigenstates(H, 0, grid)
    with pytest.raises(ConfigurationError):
        solve_eigenstates(H, 12, grid)


def test_expectation_of_eigenstate(harmonic_grid, electron):
    H = build_hamiltonian(harmonic_grid, electron, harmonic_potential(harmonic_grid))
    sol = solve_eigenstates(H, 2, harmonic_grid)
    assert expectation(H, sol.states[1]) == pytest.approx(sol.energies[1], rel=1e-12)


def test_dipole_and_populations(electron):
    grid = Grid1D(201, 0.05)
    shifted = np.exp(-((grid.x - 1.0) ** 2))
    psi = Wavefunction(shifted, grid).normalized()
    assert dipole(psi, electron) == pytest.approx(-1.0, rel=1e-8)
    left, right = side_populations(psi)
    assert left + right == pytest.approx(1.0, abs=1e-12)
    # oracle: erfc for a Gaussian density exp(-2 (x - 1)^2)
    assert left == pytest.approx(0.5 * math.erfc(math.sqrt(2.0)), abs=2e-3)


def test_symmetric_state_splits_evenly(harmonic_grid, electron):
    H = build_hamiltonian(harmonic_grid, electron, harmonic_potential(harmonic_grid))
    psi = solve_eigenstates(H, 1, harmonic_grid).ground_state
    left, right = side_populations(psi)
    assert left == pytest.approx(right, abs=1e-12)


def test_wavefunction_shape_checked():
    with pytest.raises(ConfigurationError):
        Wavefunction(np.zeros(5), Grid1D(6, 0.1))
