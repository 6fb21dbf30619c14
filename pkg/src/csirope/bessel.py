"""Bessel function J0, self-contained so it can serve as an oracle.

Two independent evaluation routes are provided on purpose: the production
`bessel_j0` (power series for small argument, Hankel asymptotic expansion
beyond) and `bessel_j0_quadrature` (trapezoid on the integral
representation), so each can cross-check the other and both can be checked
against tabulated values without importing a special-function library.
"""

from __future__ import annotations

import numpy as np

_SERIES_CUTOFF = 12.0


def _j0_series(x: np.ndarray) -> np.ndarray:
    # J0(x) = sum_m (-1)^m (x^2/4)^m / (m!)^2 ; converges fast for |x| <= 12
    q = 0.25 * x * x
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for m in range(1, 40):
        term = term * (-q) / (m * m)
        acc = acc + term
        if np.max(np.abs(term)) < 1e-18:
            break
    return acc


def _j0_asymptotic(x: np.ndarray) -> np.ndarray:
    # Hankel expansion: J0(x) ~ sqrt(2/(pi x)) [P(x) cos(x-pi/4) - Q(x) sin(x-pi/4)]
    inv2 = 1.0 / (x * x)
    p = 1.0 + inv2 * (-9.0 / 128.0 + inv2 * (11025.0 / 98304.0 - inv2 * 108056025.0 / 188743680.0))
    q = (1.0 / x) * (-1.0 / 8.0 + inv2 * (75.0 / 1024.0 - inv2 * 893025.0 / 3932160.0))
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x):
    """J0 evaluated elementwise; series below 12, asymptotic above."""
    arr = np.abs(np.asarray(x, dtype=np.float64))
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    small = arr <= _SERIES_CUTOFF
    if small.any():
        out[small] = _j0_series(arr[small])
    if (~small).any():
        out[~small] = _j0_asymptotic(arr[~small])
    return float(out[0]) if scalar else out


def bessel_j0_quadrature(x, n_points: int = 512):
    """J0 via (1/pi) * integral_0^pi cos(x sin t) dt, trapezoid rule.

    The integrand is smooth and periodic, so the trapezoid rule converges
    spectrally; n_points=512 is ample for |x| up to a few hundred.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    t = np.linspace(0.0, np.pi, n_points + 1)
    f = np.cos(arr[:, None] * np.sin(t)[None, :])
    out = np.trapezoid(f, t, axis=1) / np.pi
    return float(out[0]) if scalar else out
