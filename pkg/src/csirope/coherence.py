"""Empirical per-axis autocorrelation profiles and coherence extents.

For a stack of channel realizations H[n,t,k,u], the profile along one axis
at lag d averages H(x) * conj(H(x+d)) over every anchor coordinate x for
which x+d stays in range, across all realizations, normalized by the power
of the same anchor set. Anchoring the denominator on the valid-pair set
makes rho[0] exactly 1 by construction.

Analytic reference curves (Clarke/Bessel in time, exponential-profile
transform in frequency) live here too, so dataset diagnostics and oracle
tests share one code path. All functions are pure; parallelizing across
lags or samples is safe.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bessel import bessel_j0
from .channel import CsiArray

_AXES = {"T": 1, "K": 2, "U": 3}


class AnalysisError(ValueError):
    """Invalid lag range or parameters for a coherence computation."""


@dataclass
class AcfProfile:
    """Normalized complex autocorrelation along one axis, lags 0..max_lag."""

    axis: str
    lags: np.ndarray
    rho: np.ndarray
    n_samples: int

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=int)
        self.rho = np.asarray(self.rho, dtype=np.complex128)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.rho)


@dataclass
class CoherenceExtents:
    """First lags where |rho| falls to eta; None marks beyond-range."""

    eta: float
    c_t: int | None = None
    c_k: int | None = None
    c_u: int | None = None


def _as_stack(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        arr = samples
    else:
        arr = np.stack([s.h if isinstance(s, CsiArray) else np.asarray(s) for s in samples])
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4:
        raise AnalysisError(f"expected samples with shape (N,T,K,U), got {arr.shape}")
    return arr.astype(np.complex128, copy=False)


def acf_at_lag(samples, axis: str, lag: int) -> complex:
    """Single normalized correlation value; negative lags supported."""
    arr = _as_stack(samples)
    ax = _AXES[axis]
    extent = arr.shape[ax]
    if abs(lag) >= extent:
        raise AnalysisError(f"lag {lag} out of range for axis {axis} extent {extent}")
    sl_anchor = [slice(None)] * 4
    sl_shift = [slice(None)] * 4
    if lag >= 0:
        sl_anchor[ax] = slice(0, extent - lag)
        sl_shift[ax] = slice(lag, extent)
    else:
        sl_anchor[ax] = slice(-lag, extent)
        sl_shift[ax] = slice(0, extent + lag)
    anchor = arr[tuple(sl_anchor)]
    shifted = arr[tuple(sl_shift)]
    den = np.sum(anchor * np.conj(anchor)).real
    if den == 0:
        raise AnalysisError("anchor set has zero power")
    if lag == 0:
        # numerator and denominator are the same sum; rho[0] = 1 by construction
        return 1.0 + 0.0j
    num = np.sum(anchor * np.conj(shifted))
    return complex(num / den)


def empirical_acf(samples, axis: str, max_lag: int) -> AcfProfile:
    """Ensemble ACF over lags 0..max_lag along one of {T, K, U}."""
    arr = _as_stack(samples)
    if axis not in _AXES:
        raise AnalysisError(f"axis must be one of T/K/U, got {axis!r}")
    extent = arr.shape[_AXES[axis]]
    if not 0 <= max_lag < extent:
        raise AnalysisError(f"max_lag {max_lag} out of range for axis extent {extent}")
    lags = np.arange(max_lag + 1)
    rho = np.array([acf_at_lag(arr, axis, int(d)) for d in lags])
    return AcfProfile(axis, lags, rho, n_samples=arr.shape[0])


def coherence_extent(profile: AcfProfile, eta: float) -> int | None:
    """Smallest lag with |rho| <= eta, or None if no crossing in range."""
    if not 0.0 < eta < 1.0:
        raise AnalysisError(f"eta must lie in (0, 1), got {eta}")
    mags = profile.magnitude
    below = np.nonzero(mags <= eta)[0]
    return int(profile.lags[below[0]]) if below.size else None


def extents_for(profiles: Sequence[AcfProfile], eta: float) -> CoherenceExtents:
    out = CoherenceExtents(eta=eta)
    for p in profiles:
        setattr(out, f"c_{p.axis.lower()}", coherence_extent(p, eta))
    return out


def analytic_acf(kind: str, params: dict, lags) -> AcfProfile:
    """Closed-form reference profiles.

    clarke_bessel: rho(d) = J0(2 pi f_D d dt); params doppler_hz, slot_s.
    exp_pdp:       rho(d) = 1 / (1 + j 2 pi d df sigma_tau);
                   params delay_spread_s, subcarrier_spacing_hz.
                   Compare magnitudes against empirical profiles; the
                   empirical phase convention is the conjugate of this one.
    """
    lags = np.asarray(lags, dtype=int)
    if kind == "clarke_bessel":
        arg = 2.0 * np.pi * params["doppler_hz"] * params["slot_s"] * lags
        rho = bessel_j0(arg).astype(np.complex128)
        axis = "T"
    elif kind == "exp_pdp":
        omega = 2.0 * np.pi * lags * params["subcarrier_spacing_hz"] * params["delay_spread_s"]
        rho = 1.0 / (1.0 + 1j * omega)
        axis = "K"
    else:
        raise AnalysisError(f"unknown analytic ACF kind {kind!r}")
    return AcfProfile(axis, lags, rho, n_samples=0)


def export_acf_csv(profile: AcfProfile, path) -> Path:
    """One profile per file; columns axis, lag, re, im, abs; header mandatory."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "lag", "re", "im", "abs"])
        for lag, value in zip(profile.lags, profile.rho):
            writer.writerow(
                [
                    profile.axis,
                    int(lag),
                    repr(float(value.real)),
                    repr(float(value.imag)),
                    repr(float(abs(value))),
                ]
            )
    return path
