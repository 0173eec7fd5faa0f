import math

import numpy as np
import pytest
from scipy.special import gammaln

from spherepack.quadrature import gauss_legendre_box, log_integrate


def test_gaussian_integral():
    got = log_integrate(lambda x: -0.5 * x * x, -40.0, 40.0, 0.0, 1.0)
    assert got == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-12)


def test_far_below_underflow():
    # exp(-1e5 - x^2/2) is zero in double precision everywhere
    got = log_integrate(lambda x: -1e5 - 0.5 * x * x, -40.0, 40.0, 0.0, 1.0)
    assert got == pytest.approx(-1e5 + 0.5 * math.log(2 * math.pi), rel=1e-15)


def test_peak_at_endpoint():
    # integral of exp(-x) over [0, inf) cut at 200
    assert log_integrate(lambda x: -x, 0.0, 200.0, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_gamma_function():
    k = 50.0
    got = log_integrate(lambda x: (k - 1) * np.log(x) - x, 0.0, 500.0, k - 1, math.sqrt(k))
    assert got == pytest.approx(float(gammaln(k)), rel=1e-11)


def test_empty_interval():
    with pytest.raises(ValueError):
        log_integrate(lambda x: -x, 1.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("dim,order", [(1, 64), (2, 48)])
def test_box_integrates_gaussian(dim, order):
    g = gauss_legendre_box(dim, 8.0, order, 1.0)
    log_pdf = -0.5 * np.sum(g.nodes**2, axis=1) - 0.5 * dim * math.log(2 * math.pi)
    assert abs(math.exp(float(g.log_integrate(log_pdf))) - 1) <= max(g.certified_tol, 1e-13)
    assert g.size == order**dim and g.dim == dim
