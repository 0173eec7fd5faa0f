import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from spherepack.channel import DiscreteChannel, make_bsc, make_mpsk_awgn, make_z_channel
from spherepack.exponents import (
    capacity,
    e0,
    e0_opt,
    esp,
    kkt_residual,
    mu0_with_derivatives,
    mu_fixed,
    optimal_q,
    random_coding_bound,
    random_coding_exponent,
    support_condition,
    tilted_measure,
)
from spherepack.results import CodeSpec

LN2 = math.log(2)


def bsc_e0(rho, p=0.1):
    t = 1.0 / (1.0 + rho)
    return rho * LN2 - (1.0 + rho) * np.log(p**t + (1 - p) ** t)


def z_e0(q0, rho, eps=0.5):
    # P(0|0) = 1, P(0|1) = eps, P(1|1) = 1 - eps
    t = 1.0 / (1.0 + rho)
    q1 = 1.0 - q0
    return -np.log((q0 + q1 * eps**t) ** (1 + rho) + (q1 * (1 - eps) ** t) ** (1 + rho))


def z_q_oracle(rho):
    grid = np.arange(0, 10001) / 10000
    best = grid[np.argmax(z_e0(grid, rho))]
    res = optimize.minimize_scalar(lambda a: -z_e0(a, rho), bounds=(best - 1e-4, best + 1e-4),
                                   method="bounded", options={"xatol": 1e-13})
    return best, float(res.x)


def random_dmc(seed, k=3, j=4, conc=0.7):
    rng = np.random.default_rng(seed)
    return DiscreteChannel(rng.dirichlet(np.full(j, conc), size=k))


def test_e0_bsc_closed_form():
    want = LN2 - 2 * math.log(math.sqrt(0.9) + math.sqrt(0.1))
    assert e0(make_bsc(0.1), 1.0, [0.5, 0.5]) == pytest.approx(want, abs=1e-14)
    assert want == pytest.approx(0.2231, abs=1e-4)


@pytest.mark.parametrize("rho", [0.3, 1.0, 7.0])
def test_e0_noiseless(rho):
    assert e0(make_bsc(0.0), rho, [0.5, 0.5]) == pytest.approx(rho * LN2, rel=1e-14)


def test_e0_at_zero_and_validation():
    assert e0(make_z_channel(0.3), 0.0, [0.2, 0.8]) == 0.0
    with pytest.raises(ValueError):
        e0(make_bsc(0.1), -0.1, [0.5, 0.5])
    with pytest.raises(ValueError):
        e0(make_bsc(0.1), 1.0, [1.0])


def test_optimal_q_trivial_cases():
    assert np.array_equal(optimal_q(make_bsc(0.2), 3.0).q, [0.5, 0.5])
    assert np.array_equal(optimal_q(DiscreteChannel([[0.3, 0.7]]), 1.0).q, [1.0])
    with pytest.raises(ValueError):
        optimal_q(make_bsc(0.2), -1.0)


def test_optimal_q_z_channel_grid():
    grid_best, refined = z_q_oracle(1.0)
    q = optimal_q(make_z_channel(0.5), 1.0).q
    assert abs(q[0] - grid_best) <= 1e-4
    assert q[0] == pytest.approx(refined, abs=1e-8)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("rho", [0.0, 1e-3, 0.5, 2.0, 50.0])
def test_optimal_q_kkt(seed, rho):
    ch = random_dmc(seed, k=4, j=5, conc=0.4)
    q = optimal_q(ch, rho)
    assert kkt_residual(ch, rho, q) < 1e-10
    # no random perturbation does better
    rng = np.random.default_rng(seed)
    for _ in range(20):
        alt = np.abs(q.q + 0.01 * rng.standard_normal(4))
        assert e0(ch, rho, alt / alt.sum()) <= e0(ch, rho, q) + 1e-12


def test_optimal_q_drops_dominated_input():
    # the third input is a mixture of the other two and is never worth using
    ch = DiscreteChannel([[0.9, 0.1], [0.1, 0.9], [0.5, 0.5]])
    q = optimal_q(ch, 1.0).q
    assert q[2] == 0.0
    assert q[0] == pytest.approx(0.5, abs=1e-12)


def test_esp_bsc_grid_oracle():
    rho = np.arange(0, 1_000_001) * 1e-4
    vals = bsc_e0(rho) - rho * 0.3
    ex = esp(make_bsc(0.1), 0.3)
    assert ex.value == pytest.approx(vals.max(), abs=1e-9)
    assert ex.optimizer_rho == pytest.approx(rho[np.argmax(vals)], abs=2e-4)


def test_esp_limits():
    ch = make_bsc(0.1)
    above = esp(ch, capacity(ch) + 0.01)
    assert above.value == 0 and above.optimizer_rho == 0
    assert esp(make_bsc(0.0), 0.5).diverges
    with pytest.raises(ValueError):
        esp(ch, 0.0)


def test_random_coding_bsc_grid_oracle():
    rho = np.arange(0, 10001) * 1e-4
    best = float(np.max(bsc_e0(rho) - rho * 0.3))
    res = random_coding_bound(make_bsc(0.1), CodeSpec(100, 0.3))
    assert res.log_pe == pytest.approx(-100 * best, abs=1e-7)
    assert not res.lower
    assert random_coding_bound(make_bsc(0.1), 100, 0.6).log_pe == 0.0


def test_esp_equals_er_above_critical_rate():
    ch = make_bsc(0.1)
    # the critical rate is the slope of E_0 at rho = 1
    rcrit = (e0_opt(ch, 1 + 1e-6) - e0_opt(ch, 1 - 1e-6)) / 2e-6
    for r in np.linspace(rcrit + 0.01, capacity(ch) - 0.01, 4):
        assert esp(ch, r).value == pytest.approx(random_coding_exponent(ch, r).value, abs=1e-9)
    r = rcrit / 2
    assert esp(ch, r).value > random_coding_exponent(ch, r).value + 1e-3


def test_capacity_closed_forms():
    h = -(0.1 * math.log(0.1) + 0.9 * math.log(0.9))
    assert capacity(make_bsc(0.1)) == pytest.approx(LN2 - h, abs=1e-14)
    assert capacity(make_bsc(0.0)) == pytest.approx(LN2, abs=1e-14)
    # Z-channel(1/2): C = log2(5/4) bits
    assert capacity(make_z_channel(0.5)) == pytest.approx(math.log(1.25), abs=1e-10)


def bpsk_capacity_oracle(es):
    s2 = 1.0 / (2 * es)

    def integrand(y):
        # symmetric output: I = E[log2(2 / (1 + exp(-2 y / s2)))] with y ~ N(1, s2)
        dens = math.exp(-((y - 1) ** 2) / (2 * s2)) / math.sqrt(2 * math.pi * s2)
        return dens * (1 - math.log2(1 + math.exp(-2 * y / s2)))

    return integrate.quad(integrand, -40, 40, epsabs=1e-13, epsrel=1e-13, limit=500, points=[1.0])[0]


def test_bpsk_capacity_near_half_bit():
    es = 0.5 * 10 ** (0.187 / 10)
    got = capacity(make_mpsk_awgn(2, es)) / LN2
    assert got == pytest.approx(bpsk_capacity_oracle(es), abs=1e-10)
    assert abs(got - 0.5) < 2e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(2, 5))
def test_e0_concave_nondecreasing(seed, k, j):
    ch = random_dmc(seed, k, j)
    q = np.full(k, 1 / k)
    vals = np.array([e0(ch, r, q) for r in np.linspace(0, 4, 41)])
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all(np.diff(vals, 2) <= 1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.5, 0.9]))
def test_tilted_measure_normalized(seed, s):
    ch = random_dmc(seed, 2, 3, conc=3.0)
    if not support_condition(ch, points=9).passed:
        return
    assert abs(tilted_measure(ch, s).log_total()) < 1e-9


def test_tilted_measure_bsc_uniform():
    tm = tilted_measure(make_bsc(0.2), 0.4)
    assert np.allclose(np.exp(tm.log_f), 0.5, atol=1e-14)


def test_tilted_measure_z_channel():
    s = 0.5
    _, q0 = z_q_oracle(s / (1 - s))
    P = np.array([[1.0, 0.0], [0.5, 0.5]])
    alpha = q0 * P[0] ** (1 - s) + (1 - q0) * P[1] ** (1 - s)
    f = alpha ** (1 / (1 - s))
    f /= f.sum()
    got = np.exp(tilted_measure(make_z_channel(0.5), s).log_f)
    assert np.allclose(got, f, atol=1e-9)


def test_mu0_bsc_value_and_limits():
    ch = make_bsc(0.1)
    assert mu0_with_derivatives(ch, 0.5).mu0 == pytest.approx(-0.5 * bsc_e0(1.0), abs=1e-13)
    assert mu0_with_derivatives(ch, 0.5).mu0 == pytest.approx(-0.1116, abs=1e-4)
    assert abs(mu0_with_derivatives(ch, 1e-6).mu0) < 1e-6


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_mu0_derivatives_z_channel(s):
    ch, h = make_z_channel(0.5), 1e-5
    m = mu0_with_derivatives(ch, s)
    log_f = tilted_measure(ch, s).log_f
    q = optimal_q(ch, s / (1 - s)).q

    def mu(t):
        return float(np.dot(q, mu_fixed(ch, t, log_f)))

    d1 = (mu(s + h) - mu(s - h)) / (2 * h)
    d2 = (mu(s + h) - 2 * mu(s) + mu(s - h)) / h**2
    assert m.mu0_prime == pytest.approx(d1, rel=1e-6)
    assert m.mu0_second == pytest.approx(d2, rel=1e-4)
    assert m.mu0 <= 0 and m.mu0_second > 0
    assert m.spread < 1e-9


def test_support_condition_reports():
    assert support_condition(make_bsc(0.1)).min_component == 0.5
    rep = support_condition(make_mpsk_awgn(8, 1.0))
    assert rep.passed and rep.min_component == pytest.approx(1 / 8)
    rep = support_condition(make_z_channel(0.5))
    q0 = z_q_oracle(0.99 / 0.01)[1]
    assert rep.passed and rep.worst_s == pytest.approx(0.99)
    assert rep.min_component == pytest.approx(min(q0, 1 - q0), abs=1e-8)
    bad = support_condition(DiscreteChannel([[0.9, 0.1], [0.1, 0.9], [0.5, 0.5]]), points=9)
    assert not bad.passed and 0 < bad.worst_s < 1
