"""The one Fourier convention used everywhere.

Forward:  ``F[f](w) = int_0^inf f(t) exp(+i w t) dt``
Inverse:  ``f(t) = (1/2pi) int dw exp(-i w t) F(w)``

Discrete counterpart for real samples ``f_j = f(j dt)``, ``j = 0..n-1``:
``F_l = dt * sum_j f_j exp(+2 pi i j l / n)`` on ``w_l = 2 pi l / (n dt)``,
stored on the non-negative half axis ``l = 0..n//2``. The inverse rebuilds the
negative half from ``F(-w) = conj(F(w))`` so that real signals stay real.
"""

from __future__ import annotations

import numpy as np
import scipy.fft


def frequencies(n: int, dt: float) -> np.ndarray:
    """Non-negative angular frequencies of an ``n``-sample real transform."""
    return 2.0 * np.pi * np.arange(n // 2 + 1) / (n * dt)


def forward(samples: np.ndarray, dt: float, n: int | None = None) -> np.ndarray:
    """Half-axis transform of real causal samples (zero padded to ``n``)."""
    return dt * np.conj(scipy.fft.rfft(samples, n=n))


def inverse(values: np.ndarray, dt: float, n: int) -> np.ndarray:
    """Real time samples from half-axis values, Hermitian extension implied."""
    return scipy.fft.irfft(np.conj(values), n=n) / dt


def fast_length(n: int) -> int:
    return scipy.fft.next_fast_len(int(n), real=True)
