"""RK4 propagation with the radiation-reaction memory field."""

import numpy as np
import pytest

from rrembed.environment import CavitySpec, MemoryKernel, SpectralGrid, bare_green, kernel_from_green
from rrembed.errors import ConfigurationError, StabilityError
from rrembed.grid import Grid1D, ParticleSpec, Wavefunction
from rrembed.potentials import DeltaKick, SoftCoulomb
from rrembed.propagation import (
    DipoleTrace,
    PropagationConfig,
    TimeDependentHamiltonian,
    propagate,
    rr_field,
)
from rrembed.units import MU0


def synthetic_kernel(n_steps, dt, amplitude=-5e-3, omega=0.4, eta=0.01):
    t = np.arange(n_steps + 1) * dt
    return MemoryKernel(t, amplitude * np.exp(-eta * t) * np.cos(omega * t))


@pytest.fixture(scope="module")
def atom():
    grid = Grid1D(121, 0.2)
    ham = TimeDependentHamiltonian(grid, ParticleSpec.electron(), [SoftCoulomb(1.0)])
    from rrembed.grid import solve_eigenstates

    psi0 = solve_eigenstates(ham.matrix(0.0), 1, grid).ground_state
    return ham, psi0


def test_config_validation():
    for kw in (dict(dt=0.0, n_steps=1), dict(dt=0.1, n_steps=0), dict(dt=0.1, n_steps=1, record_stride=0)):
        with pytest.raises(ConfigurationError):
            PropagationConfig(**kw)
    assert PropagationConfig(0.1, 10).duration == pytest.approx(1.0)


def test_stationary_state(atom):
    ham, psi0 = atom
    trace, obs = propagate(psi0, ham, None, PropagationConfig(0.02, 2000, record_stride=100))
    assert np.abs(trace.R - trace.R[0]).max() < 1e-10
    assert np.abs(obs.norm - 1).max() < 1e-10
    # RK4 is not exactly unitary; the drift is O(dt^4) per unit time
    assert np.abs(obs.energy - obs.energy[0]).max() < 1e-9
    # the stationary state only acquires a phase
    overlap = abs(psi0.overlap(obs.final_state))
    assert overlap == pytest.approx(1.0, abs=1e-10)


def test_kicked_atom_conserves_norm_and_energy_after_kick(atom):
    ham, psi0 = atom
    kick = DeltaKick(strength=1e-3, center=0.5, width=0.02)
    _, obs = propagate(psi0, ham, None, PropagationConfig(0.01, 3000, record_stride=50, kick=kick))
    assert np.abs(obs.norm - 1).max() < 1e-9
    after = obs.times > 2.0
    e = obs.energy[after]
    assert np.abs(e - e[0]).max() < 1e-8


def test_initial_state_must_be_normalised(atom):
    ham, psi0 = atom
    bad = Wavefunction(psi0.amplitudes * 1.01, psi0.grid)
    with pytest.raises(ConfigurationError):
        propagate(bad, ham, None, PropagationConfig(0.01, 10))


def test_kernel_checks(atom):
    ham, psi0 = atom
    with pytest.raises(ConfigurationError):
        propagate(psi0, ham, synthetic_kernel(5, 0.01), PropagationConfig(0.01, 10))
    with pytest.raises(ConfigurationError):
        propagate(psi0, ham, synthetic_kernel(10, 0.02), PropagationConfig(0.01, 10))


def test_unstable_step_raises(atom):
    ham, psi0 = atom
    with pytest.raises(StabilityError):
        propagate(psi0, ham, None, PropagationConfig(0.5, 200))


def test_blocked_history_matches_direct_sum(atom):
    ham, psi0 = atom
    n = 1500
    config = PropagationConfig(0.02, n, record_stride=10, kick=DeltaKick(1e-2, 0.3, 0.05))
    kernel = synthetic_kernel(n, 0.02)
    direct, obs_d = propagate(psi0, ham, kernel, config, block_size=None)
    for block in (64, 500):
        blocked, obs_b = propagate(psi0, ham, kernel, config, block_size=block)
        assert np.abs(blocked.R - direct.R).max() < 1e-10 * np.abs(direct.R).max()
        assert np.abs(obs_b.e_rr_full - obs_d.e_rr_full).max() < 1e-10 * np.abs(obs_d.e_rr_full).max()


def test_rr_field_reproduces_applied_field(atom):
    ham, psi0 = atom
    n = 800
    config = PropagationConfig(0.02, n, kick=DeltaKick(1e-2, 0.3, 0.05))
    kernel = synthetic_kernel(n, 0.02)
    trace, obs = propagate(psi0, ham, kernel, config)
    for step in (0, 1, 7, 400, n):
        assert rr_field(kernel, trace, step) == pytest.approx(obs.e_rr_full[step], rel=1e-9, abs=1e-20)


def test_rr_field_impulse_and_causality():
    n, dt, k = 50, 0.1, 20
    kernel = synthetic_kernel(n, dt)
    R = np.zeros(n + 1)
    R[k:] = 2.0
    trace = DipoleTrace.from_dipole(np.arange(n + 1) * dt, R)
    fields = np.array([rr_field(kernel, trace, m) for m in range(n + 1)])
    assert not np.any(fields[:k])
    # trapezoid end weight at the step itself, full weight afterwards
    assert fields[k] == pytest.approx(0.5 * 2.0 * kernel.values[0])
    assert np.allclose(fields[k + 1 :], 2.0 * kernel.values[1 : n - k + 1])
    with pytest.raises(ConfigurationError):
        rr_field(kernel, trace, n + 1)


def test_sinusoidal_steady_state():
    # oracle: R = sin(W t) gives |E_rr| -> mu0 W^2 |g(W)| once transients decay
    cavity = CavitySpec(0.5, 0.1, 5e3)
    sg = SpectralGrid(0.02, 20000, 4)
    kernel = kernel_from_green(bare_green(cavity, sg), sg)
    W = 0.3
    t = sg.times
    trace = DipoleTrace.from_dipole(t, np.sin(W * t))
    tail = np.arange(len(t) - 2000, len(t), 7)
    E = np.array([rr_field(kernel, trace, m) for m in tail])
    basis = np.column_stack([np.sin(W * t[tail]), np.cos(W * t[tail])])
    coef, *_ = np.linalg.lstsq(basis, E, rcond=None)
    g = cavity.prefactor / (cavity.omega_c**2 - (W + 1j * cavity.eta) ** 2)
    assert np.hypot(*coef) == pytest.approx(MU0 * W**2 * abs(g), rel=0.02)


def test_charge_sign_invariance(atom):
    # the radiation-reaction term is quadratic in the charge
    ham, psi0 = atom
    n = 1000
    config = PropagationConfig(0.02, n, kick=DeltaKick(1e-2, 0.3, 0.05))
    kernel = synthetic_kernel(n, 0.02, amplitude=-5e-2)
    flipped = TimeDependentHamiltonian(ham.grid, ParticleSpec(1.0, +1.0), ham.potentials)
    a, _ = propagate(psi0, ham, kernel, config)
    b, _ = propagate(psi0, flipped, kernel, config)
    assert np.allclose(a.R, -b.R, rtol=0, atol=1e-13 * np.abs(a.R).max())
    baseline, _ = propagate(psi0, ham, None, config)
    assert np.abs(a.R - baseline.R).max() > 1e-3 * np.abs(a.R).max()


def test_zero_kernel_is_cavity_free(atom):
    ham, psi0 = atom
    config = PropagationConfig(0.02, 300, kick=DeltaKick(1e-2, 0.3, 0.05))
    a, _ = propagate(psi0, ham, None, config)
    b, _ = propagate(psi0, ham, MemoryKernel.zeros(300, 0.02), config)
    assert np.array_equal(a.R, b.R)


def test_trace_derivatives():
    t = np.linspace(0.0, 2.0, 201)
    trace = DipoleTrace.from_dipole(t, t**2)
    assert np.allclose(trace.Rdot, 2 * t, atol=1e-10)
    assert trace.causal_rdot[0] == 0.0
    assert np.allclose(trace.causal_rdot[1:], (t[1:] + t[:-1]))


def test_frozen_hamiltonian_drops_time_dependence(atom):
    ham, _ = atom
    kicked = ham.with_kick(DeltaKick(1.0, 1.0, 0.1))
    assert len(kicked.terms) == 1
    frozen = kicked.frozen(1.0)
    assert not frozen.terms
    assert np.allclose(frozen.potential(5.0), kicked.potential(1.0))
    assert ham.with_kick(None) is ham
