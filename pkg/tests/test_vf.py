import math

import mpmath
import numpy as np
import pytest

from spherepack.channel import DiscreteChannel, make_bsc, make_mpsk_awgn
from spherepack.exponents import esp
from spherepack.isp import isp_bound
from spherepack.results import CodeSpec
from spherepack.vf import LN8, O1_EXPURGATION_CONST, log_compositions, vf_bound, vf_o1, vf_terms


def test_rho_zero_terms():
    ch = DiscreteChannel([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
    t = vf_terms(ch, 0.0)
    assert np.allclose(np.exp(t.log_beta), ch.transition, atol=1e-15)
    assert np.allclose(t.nu1, 0.0, atol=1e-15) and np.allclose(t.nu2, 0.0, atol=1e-15)


def test_bsc_terms_exact():
    mpmath.mp.dps = 40
    P = [[mpmath.mpf("0.9"), mpmath.mpf("0.1")], [mpmath.mpf("0.1"), mpmath.mpf("0.9")]]
    inner = [sum(mpmath.mpf("0.5") * mpmath.sqrt(P[k][j]) for k in range(2)) for j in range(2)]
    t = vf_terms(make_bsc(0.1), 1.0)
    for k in range(2):
        beta = [mpmath.sqrt(P[k][j]) * inner[j] for j in range(2)]
        lr = [mpmath.log(beta[j] / P[k][j]) for j in range(2)]
        tot = sum(beta)
        nu1 = sum(b * v for b, v in zip(beta, lr)) / tot
        nu2 = sum(b * (v - nu1) ** 2 for b, v in zip(beta, lr)) / tot
        assert t.nu1[k] == pytest.approx(float(nu1), abs=1e-15)
        assert t.nu2[k] == pytest.approx(float(nu2), rel=1e-13)
        assert np.allclose(np.exp(t.log_beta[k]), [float(b) for b in beta], rtol=1e-14)


@pytest.mark.parametrize("seed", range(50))
def test_nu2_nonnegative(seed):
    rng = np.random.default_rng(seed)
    ch = DiscreteChannel(rng.dirichlet(np.full(4, 0.6), size=3))
    for rho in (0.1, 1.0, 5.0):
        t = vf_terms(ch, rho)
        assert np.all(t.nu2 >= 0)
        assert np.all(np.exp(t.log_beta)[ch.transition > 0] > 0)


def test_expurgation_constant_is_ln8():
    assert O1_EXPURGATION_CONST == LN8 == math.log(8)
    spec = CodeSpec(100, 0.3)
    assert vf_o1(spec, 1.0, 2) - vf_o1(spec, 1.0, 2, original_constant=True) == pytest.approx(math.log(2) / 100)
    # the corrected constant gives a weaker (smaller) bound than the original one
    ch = make_bsc(0.1)
    assert vf_bound(ch, spec).log_pe < vf_bound(ch, spec, original_constant=True).log_pe


def test_log_compositions():
    assert log_compositions(10, 2) == pytest.approx(math.log(11))
    assert log_compositions(7, 3) == pytest.approx(math.log(math.comb(9, 2)))
    assert log_compositions(5, 1) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("n,rate", [(200, 0.3), (500, 0.3), (1000, 0.4)])
def test_symmetric_channel_equals_isp_with_composition_loss(n, rate):
    # on a BSC the two bounds differ only by the ln C(N+1, 1)/N rate back-off
    ch = make_bsc(0.1)
    vf = vf_bound(ch, CodeSpec(n, rate)).log_pe
    isp = isp_bound(ch, CodeSpec(n, rate - math.log(n + 1) / n)).log_pe
    assert vf == pytest.approx(isp, abs=1e-9)


def test_root_residual_and_diagnostics():
    res = vf_bound(make_bsc(0.1), CodeSpec(500, 0.3))
    assert res.diagnostics["root_status"] == "root"
    assert abs(res.diagnostics["residual"]) < 1e-9 * 0.3
    assert res.params["x"] > math.sqrt(0.5) and 0 < res.params["s"] < 1
    assert not res.diagnostics["asymmetric_caveat"]


def test_asymptotic_exponent():
    ch = make_bsc(0.1)
    got = vf_bound(ch, CodeSpec(10**7, 0.3)).exponent
    assert abs(got - esp(ch, 0.3).value) < 1e-3


def test_continuous_output_channel():
    ch = make_mpsk_awgn(2, 1.0)
    res = vf_bound(ch, CodeSpec(200, 0.3))
    assert math.isfinite(res.log_pe) and res.log_pe < 0
