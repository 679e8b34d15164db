"""Arrowhead Hamiltonian and its bright/dark reduction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrembed.hopfield import (
    HopfieldSpec,
    bright_dark_reduce,
    build_arrowhead,
    polariton_weights,
    reduced_spectrum,
    sweep_bright,
)

SPEC = dict(omega_c=0.4, omega_E=0.41, omega_m=0.395, g=0.002, g_m=0.003)


def test_arrowhead_layout():
    H = build_arrowhead(HopfieldSpec(**SPEC, N=3))
    assert H.shape == (5, 5)
    assert np.array_equal(H, H.T)
    assert np.allclose(np.diag(H), [0.4, 0.41, 0.41, 0.41, 0.395])
    assert np.allclose(H[0, 1:4], 0.002)
    assert H[0, 4] == 0.003
    assert not np.any(H[1:4, 4])


def test_union_identity_small():
    spec = HopfieldSpec(**SPEC, N=7)
    full = np.linalg.eigvalsh(build_arrowhead(spec))
    assert np.allclose(reduced_spectrum(spec), full, rtol=0, atol=1e-13)
    block, dark = bright_dark_reduce(spec)
    assert dark == 6
    assert np.trace(block) + dark * spec.omega_E == pytest.approx(full.sum(), abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 40),
    st.floats(0.1, 1.0),
    st.floats(0.1, 1.0),
    st.floats(1e-4, 0.1),
    st.floats(0.0, 0.1),
)
def test_union_identity_property(n, w_e, w_m, g, g_m):
    spec = HopfieldSpec(0.5, w_e, w_m, g, g_m, n)
    full = np.linalg.eigvalsh(build_arrowhead(spec))
    assert np.allclose(reduced_spectrum(spec), full, rtol=0, atol=1e-12)


def test_two_level_splitting():
    # without the molecule the bright block splits by 2 sqrt((D/2)^2 + N g^2)
    spec = HopfieldSpec(0.4, 0.43, 0.2, 0.004, 0.0, 25)
    block, _ = bright_dark_reduce(spec)
    e = np.linalg.eigvalsh(block[:2, :2])
    assert e[1] - e[0] == pytest.approx(2 * np.sqrt((0.03 / 2) ** 2 + 25 * 0.004**2), abs=1e-14)


def test_weights_sum_to_one():
    spec = HopfieldSpec(**SPEC, N=50)
    for matrix, layout in ((bright_dark_reduce(spec)[0], "bright"), (build_arrowhead(spec), "arrowhead")):
        _, w = polariton_weights(matrix, layout)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)


def test_dark_states_carry_no_light():
    spec = HopfieldSpec(**SPEC, N=6)
    energies, w = polariton_weights(build_arrowhead(spec))
    dark = np.isclose(energies, spec.omega_E, atol=1e-12)
    assert dark.sum() == 5
    assert np.allclose(w[dark, 0], 0.0, atol=1e-20)
    assert np.allclose(w[dark, 1], 1.0)


def test_bright_block_weights_match_full_matrix():
    spec = HopfieldSpec(**SPEC, N=6)
    e_b, w_b = polariton_weights(bright_dark_reduce(spec)[0])
    e_f, w_f = polariton_weights(build_arrowhead(spec))
    bright = ~np.isclose(e_f, spec.omega_E, atol=1e-12)
    assert np.allclose(e_b, e_f[bright])
    assert np.allclose(w_b, w_f[bright], atol=1e-10)


def test_validation():
    with pytest.raises(ValueError):
        HopfieldSpec(**SPEC, N=-1)
    with pytest.raises(ValueError):
        HopfieldSpec(0.0, 0.4, 0.4, 0.1, 0.1, 2)
    with pytest.raises(ValueError):
        bright_dark_reduce(HopfieldSpec(**SPEC, N=0))
    with pytest.raises(ValueError):
        polariton_weights(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        polariton_weights(np.eye(3), "diagonal")


def test_sweep_bright():
    rows = sweep_bright(0.4, 0.41, 0.395, 0.002, 0.003, [1, 100])
    assert [r[0] for r in rows] == [1, 100]
    assert rows[1][1][-1] > rows[0][1][-1]
