"""Synthetic CSI generator with independently controllable per-axis coherence.

The model is a sum over propagation paths. Each path carries
  * a complex gain whose power follows an exponential delay profile,
  * a Doppler shift f_D cos(alpha) with alpha uniform on the Clarke ring,
  * a departure angle phi giving a linear-array phase across antenna ports,
so the channel entry is

  H(t,k,u) = sum_p g_p * exp(+j 2 pi f_D cos(a_p) t dt)
                   * exp(-j 2 pi k df tau_p)
                   * exp(+j 2 pi spacing u sin(phi_p)).

Each axis then has a known analytic autocorrelation (Bessel in time,
exponential-profile transform in frequency), which is what makes the
generator testable against closed-form oracles. Samples are seeded
individually from (master seed, sample index), so generation order and any
parallelism across samples cannot change the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# stream tag separating the split permutation from per-sample streams
_SPLIT_STREAM = 0x53504C49


class ConfigError(ValueError):
    """A channel configuration field is out of its valid range."""


@dataclass(frozen=True)
class ChannelConfig:
    """Scenario knobs for one synthetic dataset.

    speed_mps and delay_spread_s may be zero (degenerate but valid: no
    temporal / no frequency decorrelation); every other physical quantity
    must be strictly positive.
    """

    T: int
    K: int
    U: int
    slot_duration_s: float = 1e-3
    subcarrier_spacing_hz: float = 30e3
    carrier_hz: float = 3.5e9
    speed_mps: float = 8.0
    delay_spread_s: float = 100e-9
    antenna_spacing_wavelengths: float = 0.5
    num_paths: int = 64
    seed: int = 0
    scenario_tag: str = ""
    noise_std: float = 0.0  # additive complex noise per entry; off by default

    @property
    def max_doppler_hz(self) -> float:
        return self.speed_mps * self.carrier_hz / SPEED_OF_LIGHT

    def validate(self) -> None:
        for name in ("T", "K", "U"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.num_paths < 8:
            raise ConfigError(f"num_paths must be >= 8, got {self.num_paths}")
        for name in (
            "slot_duration_s",
            "subcarrier_spacing_hz",
            "carrier_hz",
            "antenna_spacing_wavelengths",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("speed_mps", "delay_spread_s", "noise_std"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if "\n" in self.scenario_tag or "=" in self.scenario_tag:
            raise ConfigError("scenario_tag must not contain '=' or newlines")


@dataclass
class CsiArray:
    """One complex channel realization H[T,K,U] plus its provenance."""

    h: np.ndarray
    config: ChannelConfig
    sample_index: int = 0

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.complex128)
        expected = (self.config.T, self.config.K, self.config.U)
        if self.h.shape != expected:
            raise ConfigError(f"CSI shape {self.h.shape} != config extents {expected}")
        if not np.isfinite(self.h).all():
            raise ConfigError("CSI array contains non-finite entries")

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.h) ** 2))


def sample_rng(master_seed: int, sample_index: int) -> np.random.Generator:
    """Per-sample generator; independent of generation order and parallelism."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, sample_index)))


def generate_sample(config: ChannelConfig, sample_index: int) -> CsiArray:
    """Draw one channel realization. Draw order is part of the format:
    delays, ring angles, departure angles, gain phases, then noise."""
    rng = sample_rng(config.seed, sample_index)
    p = config.num_paths

    # delays uniform on [0, 10 sigma_tau] then sorted; exponential powers
    if config.delay_spread_s > 0:
        delays = np.sort(rng.uniform(0.0, 10.0 * config.delay_spread_s, size=p))
        weights = np.exp(-delays / config.delay_spread_s)
    else:
        delays = np.zeros(p)
        rng.uniform(0.0, 1.0, size=p)  # keep the stream layout fixed
        weights = np.ones(p)
    powers = weights / weights.sum()

    alpha = rng.uniform(0.0, 2.0 * np.pi, size=p)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=p)
    psi = rng.uniform(0.0, 2.0 * np.pi, size=p)
    gains = np.sqrt(powers) * np.exp(1j * psi)

    t = np.arange(config.T) * config.slot_duration_s
    k = np.arange(config.K) * config.subcarrier_spacing_hz
    u = np.arange(config.U) * config.antenna_spacing_wavelengths

    doppler = config.max_doppler_hz * np.cos(alpha)
    phase_t = np.exp(2j * np.pi * t[:, None] * doppler[None, :])
    phase_k = np.exp(-2j * np.pi * k[:, None] * delays[None, :])
    phase_u = np.exp(2j * np.pi * u[:, None] * np.sin(phi)[None, :])

    h = np.einsum("p,tp,kp,up->tku", gains, phase_t, phase_k, phase_u, optimize=True)
    if config.noise_std > 0:
        noise = rng.standard_normal((config.T, config.K, config.U, 2))
        h = h + config.noise_std / np.sqrt(2.0) * (noise[..., 0] + 1j * noise[..., 1])
    return CsiArray(h, config, sample_index)


def generate(config: ChannelConfig, n_samples: int) -> list[CsiArray]:
    config.validate()
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    return [generate_sample(config, i) for i in range(n_samples)]


def stack_samples(samples: Sequence[CsiArray]) -> np.ndarray:
    """Samples as one (N, T, K, U) complex array."""
    return np.stack([s.h for s in samples])


# ---------------------------------------------------------------- dataset suite


def split_counts(ratios: Sequence[float], n: int) -> tuple[int, int, int]:
    """Partition sizes from train/val/test ratios via cumulative rounding."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError(f"split needs three non-negative ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {sum(ratios)}")
    bounds = [int(round(c * n)) for c in np.cumsum(ratios)]
    counts = (bounds[0], bounds[1] - bounds[0], n - bounds[1])
    if any(c < 0 for c in counts):
        raise ConfigError(f"split {ratios} of {n} produced negative counts")
    return counts


def split_indices(seed: int, n: int, ratios: Sequence[float]):
    """Deterministic random partition of range(n) into train/val/test."""
    n_train, n_val, _ = split_counts(ratios, n)
    perm = np.random.default_rng(np.random.SeedSequence((seed, _SPLIT_STREAM))).permutation(n)
    return (
        np.sort(perm[:n_train]),
        np.sort(perm[n_train : n_train + n_val]),
        np.sort(perm[n_train + n_val :]),
    )


def make_dataset_suite(
    configs: Sequence[ChannelConfig],
    n_samples: int,
    ratios: Sequence[float],
    out_dir,
    force: bool = False,
) -> list:
    """Generate and persist one dataset file per config, split recorded inside.

    Returns the written paths. Re-running with the same configs and seeds
    produces byte-identical files; existing files are refused without force.
    """
    from pathlib import Path

    from . import dataset_io

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, config in enumerate(configs):
        config.validate()
        train, val, test = split_indices(config.seed, n_samples, ratios)
        samples = generate(config, n_samples)
        tag = config.scenario_tag.replace(" ", "_") or "dataset"
        path = out_dir / f"{tag}_{i:02d}.csi3d1"
        extras = {
            "n_samples": str(n_samples),
            "split_train": ",".join(map(str, train)),
            "split_val": ",".join(map(str, val)),
            "split_test": ",".join(map(str, test)),
        }
        dataset_io.write_dataset(path, stack_samples(samples), config, extras, force=force)
        paths.append(path)
    return paths


def config_with(config: ChannelConfig, **changes) -> ChannelConfig:
    return replace(config, **changes)
