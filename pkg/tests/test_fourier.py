"""Fourier convention and unit conversions."""

import numpy as np
import pytest

from rrembed import fourier
from rrembed.units import AU_TIME_FS, FS_AU, au_to_ev, ev_to_au, fs_to_au, au_to_fs


def test_round_trip(rng):
    samples = rng.standard_normal(257)
    values = fourier.forward(samples, 0.3)
    assert np.allclose(fourier.inverse(values, 0.3, 257), samples, atol=1e-13)


def test_causal_exponential():
    # oracle: int_0^inf exp(-a t) exp(i w t) dt = 1/(a - i w); the rectangle
    # rule adds dt/2 at t=0 and O(dt^2) otherwise
    dt, a = 1e-3, 0.7
    t = np.arange(200000) * dt
    values = fourier.forward(np.exp(-a * t), dt)
    omega = fourier.frequencies(len(t), dt)
    exact = 1.0 / (a - 1j * omega[:50]) + dt / 2
    assert np.allclose(values[:50], exact, rtol=1e-5)


def test_positive_frequency_sign():
    # oracle: F[sin(w0 t) exp(-g t)](w0) ~ i/(2g), so Im F peaks at +w0 and is positive
    dt = 0.05
    t = np.arange(40000) * dt
    values = fourier.forward(np.sin(1.3 * t) * np.exp(-0.01 * t), dt)
    omega = fourier.frequencies(len(t), dt)
    k = np.argmax(np.abs(values))
    assert omega[k] == pytest.approx(1.3, abs=2 * omega[1])
    assert values[k].imag > 0
    assert values[k].imag == pytest.approx(1.0 / 0.02, rel=0.02)


def test_fast_length():
    n = fourier.fast_length(1001)
    assert n >= 1001 and n % 2 == 0


def test_unit_conversions():
    assert au_to_ev(ev_to_au(10.746)) == pytest.approx(10.746)
    assert fs_to_au(1.0) == FS_AU
    assert au_to_fs(FS_AU) == pytest.approx(1.0, rel=1e-6)
    assert AU_TIME_FS * FS_AU == pytest.approx(1.0, rel=1e-6)
