"""Shared fixtures: small emitters and cavities that keep unit tests fast."""

import numpy as np
import pytest

from rrembed.environment import CavitySpec, DrudeLorentz, SpectralGrid
from rrembed.experiments import EmitterSpec
from rrembed.grid import Grid1D, ParticleSpec


@pytest.fixture(scope="session")
def hydrogen():
    return EmitterSpec.hydrogen()


@pytest.fixture(scope="session")
def double_well():
    return EmitterSpec.double_well()


@pytest.fixture
def harmonic_grid():
    return Grid1D(401, 0.05)


@pytest.fixture
def electron():
    return ParticleSpec.electron()


@pytest.fixture
def toy_cavity():
    # slow, lossy single mode resolved by a short spectral grid
    return CavitySpec(omega_c=0.5, eta=0.02, volume=5e3)


@pytest.fixture
def toy_grid():
    return SpectralGrid(dt=0.05, n_steps=4000, oversampling=8)


@pytest.fixture
def toy_ensemble():
    return DrudeLorentz(omega_p=0.01, omega_0=0.5, gamma=0.005, n_ensemble=10)


def harmonic_potential(grid, omega=1.0, mass=1.0):
    return 0.5 * mass * omega**2 * grid.x**2


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record a one-line pass/fail verdict and assert it."""

    def record(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({detail})"
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
