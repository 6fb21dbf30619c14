"""J0 against tabulated values and the quadrature cross-check."""

import numpy as np
import pytest

from csirope.bessel import bessel_j0, bessel_j0_quadrature

# Abramowitz & Stegun / standard tables
TABLE = {
    0.0: 1.0,
    0.5: 0.938469807240813,
    1.0: 0.7651976865579666,
    2.0: 0.22389077914123567,
    5.0: -0.17759677131433830,
    8.0: 0.17165080713755390,
    10.0: -0.24593576445134835,
    15.0: -0.014224472826780773,
    20.0: 0.16702466434058315,
    50.0: 0.055812327669251746,
}


def test_j0_at_zero():
    assert bessel_j0(0.0) == 1.0


def test_j0_first_zero():
    assert abs(bessel_j0(2.404825557695773)) < 1e-3


@pytest.mark.parametrize("x,expected", sorted(TABLE.items()))
def test_j0_tabulated(x, expected):
    tol = 1e-12 if x <= 12 else 1e-7
    assert bessel_j0(x) == pytest.approx(expected, abs=tol)


def test_j0_even():
    xs = np.linspace(0.1, 30.0, 50)
    np.testing.assert_allclose(bessel_j0(-xs), bessel_j0(xs))


def test_series_and_quadrature_agree():
    xs = np.linspace(0.0, 40.0, 400)
    np.testing.assert_allclose(bessel_j0(xs), bessel_j0_quadrature(xs), atol=1e-6)


def test_quadrature_against_table():
    for x, expected in TABLE.items():
        assert bessel_j0_quadrature(x) == pytest.approx(expected, abs=1e-9)
