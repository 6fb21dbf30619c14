"""Shared Monte-Carlo ensembles; session-scoped because generation dominates."""

import numpy as np
import pytest

from csirope.channel import ChannelConfig, generate, stack_samples


def make_stack(config: ChannelConfig, n: int) -> np.ndarray:
    return stack_samples(generate(config, n))


@pytest.fixture(scope="session")
def clarke_grid_config():
    # 30 m/s at 3.5 GHz, 1 ms slots -> f_D * slot = 0.35; delay spread sized
    # so the frequency profile decays visibly within a dozen subcarrier lags
    return ChannelConfig(
        T=16,
        K=16,
        U=2,
        slot_duration_s=1e-3,
        subcarrier_spacing_hz=60e3,
        carrier_hz=3.5e9,
        speed_mps=30.0,
        delay_spread_s=1e-6,
        seed=20,
    )


@pytest.fixture(scope="session")
def clarke_grid_stack(clarke_grid_config):
    return make_stack(clarke_grid_config, 2000)


@pytest.fixture(scope="session")
def mobility_pair_stacks():
    """Same scenario at speed v and 2v, small extents, for extent monotonicity."""
    base = ChannelConfig(
        T=16,
        K=4,
        U=2,
        slot_duration_s=1e-3,
        subcarrier_spacing_hz=60e3,
        carrier_hz=3.5e9,
        speed_mps=3.0,
        delay_spread_s=50e-9,
        seed=31,
    )
    fast = ChannelConfig(**{**base.__dict__, "speed_mps": 6.0})
    return make_stack(base, 800), make_stack(fast, 800)


@pytest.fixture(scope="session")
def delay_pair_stacks():
    """Same scenario at delay spread s and 2s, for frequency-extent monotonicity."""
    base = ChannelConfig(
        T=4,
        K=32,
        U=2,
        slot_duration_s=1e-3,
        subcarrier_spacing_hz=60e3,
        carrier_hz=3.5e9,
        speed_mps=3.0,
        delay_spread_s=0.5e-6,
        seed=32,
    )
    wide = ChannelConfig(**{**base.__dict__, "delay_spread_s": 1e-6})
    return make_stack(base, 800), make_stack(wide, 800)
