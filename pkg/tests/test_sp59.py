import math

import mpmath
import numpy as np
import pytest
from scipy import stats
from scipy.special import betainc, log_ndtr

from spherepack.sp59 import SP59Error, cone_half_angle, log_cone_escape, log_solid_angle_fraction, sp59_bound


def log_cap_fraction(n, theta):
    mpmath.mp.dps = 40
    half = mpmath.betainc((n - 1) / mpmath.mpf(2), mpmath.mpf("0.5"), 0, mpmath.sin(theta) ** 2, regularized=True) / 2
    return float(mpmath.log(half if theta <= math.pi / 2 else 1 - half))


def log_escape_oracle(n, theta, amp):
    mpmath.mp.dps = 30
    k, c, d = n - 1, mpmath.cot(theta), mpmath.sqrt(n) * amp

    def integrand(r):
        log_chi = (k - 1) * mpmath.log(r) - r * r / 2 - (mpmath.mpf(k) / 2 - 1) * mpmath.log(2) \
            - mpmath.loggamma(mpmath.mpf(k) / 2)
        return mpmath.exp(log_chi) * mpmath.ncdf(c * r - d)

    return float(mpmath.log(mpmath.quad(integrand, [0, 2, 5, 8, 12, 20, 40, 80])))


@pytest.mark.parametrize("n", [3, 10, 100, 1000])
@pytest.mark.parametrize("theta", [0.3, 1.0, math.pi / 2, 2.0, 3.0])
def test_solid_angle_against_incomplete_beta(n, theta):
    want = log_cap_fraction(n, theta)
    assert log_solid_angle_fraction(n, theta) == pytest.approx(want, rel=1e-10, abs=1e-12)
    if want > -700:
        half = 0.5 * betainc((n - 1) / 2, 0.5, math.sin(theta) ** 2)
        assert math.exp(want) == pytest.approx(half if theta <= math.pi / 2 else 1 - half, rel=1e-9)


def test_solid_angle_edges():
    assert log_solid_angle_fraction(2, 1.0) == pytest.approx(math.log(1 / math.pi))
    assert log_solid_angle_fraction(50, math.pi) == 0.0
    assert log_solid_angle_fraction(50, math.pi / 2) == pytest.approx(math.log(0.5), abs=1e-12)
    vals = [log_solid_angle_fraction(30, t) for t in np.linspace(0.1, 3.1, 30)]
    # increments near pi fall below double resolution
    assert np.all(np.diff(vals) >= 0) and np.all(np.diff(vals[:20]) > 0)
    with pytest.raises(ValueError):
        log_solid_angle_fraction(1, 1.0)


def test_cone_angle_trivial_rates():
    assert cone_half_angle(40, 0.0).half_angle_theta == math.pi
    assert cone_half_angle(40, math.log(2) / 40).half_angle_theta == pytest.approx(math.pi / 2, abs=1e-10)


def test_cone_angle_mpmath_oracle():
    mpmath.mp.dps = 30
    n, rate = 100, 0.5
    log_norm = mpmath.log(mpmath.quad(lambda t: mpmath.sin(t) ** (n - 2), [0, mpmath.pi / 2, mpmath.pi]))

    def gap(theta):
        return mpmath.log(mpmath.quad(lambda t: mpmath.sin(t) ** (n - 2), [0, theta])) - log_norm + n * rate

    want = mpmath.findroot(gap, (mpmath.mpf("0.3"), mpmath.mpf("1.2")), solver="bisect", tol=1e-24)
    geom = cone_half_angle(n, rate)
    assert geom.half_angle_theta == pytest.approx(float(want), abs=1e-8)
    assert abs(geom.residual) < 1e-10 * n * rate


def test_cone_angle_rejects_huge_rate():
    with pytest.raises(SP59Error):
        cone_half_angle(2, 20.0)
    with pytest.raises(ValueError):
        cone_half_angle(10, -0.1)


@pytest.mark.parametrize("n,theta,amp", [(10, 1.047, 1.4142), (20, 1.2, 1.0), (50, 0.9, 1.5), (30, 2.0, 0.7)])
def test_escape_matches_mpmath(n, theta, amp):
    assert log_cone_escape(n, theta, amp) == pytest.approx(log_escape_oracle(n, theta, amp), rel=1e-12)


@pytest.mark.parametrize("n,theta,amp", [(10, 1.047, 1.4142), (20, 1.2, 1.0), (50, 0.9, 1.5)])
def test_escape_matches_noncentral_t(n, theta, amp):
    # the escape event is a noncentral-t tail; scipy is accurate here but not for theta > pi/2
    k = n - 1
    want = stats.nct.logcdf(math.sqrt(k) / math.tan(theta), k, math.sqrt(n) * amp)
    assert log_cone_escape(n, theta, amp) == pytest.approx(want, rel=1e-9)


@pytest.mark.parametrize("n", [10, 100, 10_000])
def test_half_space(n):
    assert log_cone_escape(n, math.pi / 2, 1.0) == pytest.approx(float(log_ndtr(-math.sqrt(n))), rel=1e-10, abs=1e-8)


def test_whole_sphere_never_escapes():
    assert log_cone_escape(10, math.pi, 1.0) == -math.inf


def test_bound_monotone():
    snr = [sp59_bound(200, 0.4, es).log_pe for es in (0.5, 0.8, 1.2, 2.0)]
    assert np.all(np.diff(snr) < 0)
    rate = [sp59_bound(200, r, 1.0).log_pe for r in (0.2, 0.3, 0.4, 0.5)]
    assert np.all(np.diff(rate) > 0)
    with pytest.raises(ValueError):
        sp59_bound(200, 0.4, 0.0)


def test_two_codewords():
    n, es = 64, 0.3
    res = sp59_bound(n, math.log(2) / n, es)
    assert res.log_pe == pytest.approx(float(log_ndtr(-math.sqrt(2 * n * es))), rel=1e-8)


def test_large_dimension_is_finite():
    res = sp59_bound(10_000, 0.3, 1.0)
    assert math.isfinite(res.log_pe) and res.log_pe < -100
