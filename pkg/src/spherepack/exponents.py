"""The E_0 function, sphere-packing and random-coding exponents, tilted measures.

All sums over channel outputs run in the log domain against the channel's
log weights, so the same code serves discrete channels (unit weights) and
continuous-output channels (quadrature weights).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .channel import InputDistribution, MemorylessChannel
from .results import BoundResult, CodeSpec

S_MIN = 1e-6
S_MAX = 1.0 - 1e-6
RHO_DIVERGE = 1e3

Q_MAX_ITER = 200
Q_TOL = 1e-10
Q_RIDGE = 1e-9
SUPPORT_FLOOR = 1e-6
SPREAD_TOL = 1e-6


class OptimizerError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class SupportConditionError(ValueError):
    """The optimizing input distribution does not cover the whole input alphabet."""


@dataclass(frozen=True)
class ExponentValue:
    value: float
    optimizer_rho: float
    optimizer_q: InputDistribution | None = None

    @property
    def diverges(self) -> bool:
        return math.isinf(self.value)


@dataclass(frozen=True)
class TiltedMeasure:
    """f_s over the channel outputs, as log values w.r.t. the output weights."""

    log_f: np.ndarray
    log_w: np.ndarray
    s: float

    def log_total(self) -> float:
        return float(logsumexp(self.log_f + self.log_w))


@dataclass(frozen=True)
class MuTriple:
    """mu_0(s, f_s) and its s-derivatives at fixed f = f_s.

    The per-letter arrays hold mu_k for every input letter; ``mu0`` and the
    derivatives are their q_s-weighted averages.
    """

    s: float
    mu0: float
    mu0_prime: float
    mu0_second: float
    mu_k: np.ndarray = field(repr=False)
    mu_k_prime: np.ndarray = field(repr=False)
    mu_k_second: np.ndarray = field(repr=False)
    log_z: float = 0.0

    @property
    def rho(self) -> float:
        return self.s / (1.0 - self.s)

    @property
    def e0(self) -> float:
        """E_0(s/(1-s)) recovered from mu_0 = -(1-s) E_0."""
        return -self.mu0 / (1.0 - self.s)

    @property
    def spread(self) -> float:
        return float(np.ptp(self.mu_k))


def _check_q(ch: MemorylessChannel, q) -> InputDistribution:
    if q is None:
        raise ValueError("input distribution required")
    if not isinstance(q, InputDistribution):
        q = InputDistribution(q)
    if len(q) != ch.num_inputs:
        raise ValueError(f"input distribution has {len(q)} entries, channel has {ch.num_inputs} inputs")
    return q


def _log_alpha(ch: MemorylessChannel, log_q: np.ndarray, power: float) -> np.ndarray:
    """ln sum_k q_k P(j|k)^power for every output j."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return logsumexp(power * ch.log_p + log_q[:, None], axis=0)


def e0(ch: MemorylessChannel, rho: float, q) -> float:
    """E_0(rho, q) in nats."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    q = _check_q(ch, q)
    if rho == 0:
        return 0.0
    log_alpha = _log_alpha(ch, q.log_q, 1.0 / (1.0 + rho))
    with np.errstate(invalid="ignore"):
        val = -float(logsumexp(ch.log_w + (1.0 + rho) * log_alpha))
    return val


def _gradient_terms(ch, log_q, rho):
    """ln of the per-letter bracket b_k and of Z = sum_j alpha_j^(1+rho)."""
    t = 1.0 / (1.0 + rho)
    log_alpha = _log_alpha(ch, log_q, t)
    with np.errstate(invalid="ignore"):
        log_z = float(logsumexp(ch.log_w + (1.0 + rho) * log_alpha))
        log_b = logsumexp(ch.log_w[None, :] + t * ch.log_p + rho * log_alpha[None, :], axis=1)
    return log_b, log_z


def _divergences(ch, q):
    """D(P(.|k) || output distribution) for every k, in nats."""
    with np.errstate(divide="ignore"):
        log_q = np.log(q)
    log_r = _log_alpha(ch, log_q, 1.0)
    P = np.exp(ch.log_p + ch.log_w[None, :])
    with np.errstate(invalid="ignore"):
        terms = np.where(P > 0, P * (ch.log_p - log_r[None, :]), 0.0)
    return terms.sum(axis=1)


def kkt_residual(ch: MemorylessChannel, rho: float, q) -> float:
    """Residual of the optimality conditions for maximizing E_0(rho, q) over q."""
    q = _check_q(ch, q).q
    if rho == 0:
        d = _divergences(ch, q)
        cap = float(np.dot(q, d))
        return float(max(np.max(np.maximum(d - cap, 0.0)), np.max(q * np.abs(d - cap))))
    with np.errstate(divide="ignore"):
        log_b, log_z = _gradient_terms(ch, np.log(q), rho)
    ratio = np.exp(log_b - log_z)
    return float(max(np.max(np.maximum(1.0 - ratio, 0.0)), np.max(q * np.abs(ratio - 1.0))))


def _newton_parts(ch: MemorylessChannel, rho: float, q: np.ndarray, full: bool = True):
    """Objective, gradient and Hessian of the convex problem behind optimal_q.

    For rho > 0 the model is the (1+rho)-norm of alpha, whose Hessian stays
    well scaled at large rho where sum_j alpha_j^(1+rho) behaves like an
    exponential. Gradient and Hessian are divided by the norm, so optimality
    reads g_k >= 1 with equality on the support; the returned objective is
    ln sum_j alpha_j^(1+rho), which orders points the same way. At rho = 0
    the objective is -I(q) with gradient -D_k.
    Outputs that the current q never reaches are left out of the Hessian.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_q = np.log(q)
        if rho == 0:
            log_r = _log_alpha(ch, log_q, 1.0)
            P = np.exp(ch.log_p + ch.log_w[None, :])
            d = np.where(P > 0, P * (ch.log_p - log_r[None, :]), 0.0).sum(axis=1)
            if not full:
                return -float(np.dot(q, d))
            live = np.isfinite(log_r)
            a = np.exp(ch.log_p[:, live])
            h = (a * np.exp(ch.log_w[live] - log_r[live])[None, :]) @ a.T
            return -float(np.dot(q, d)), -d, h
        t = 1.0 / (1.0 + rho)
        log_alpha = _log_alpha(ch, log_q, t)
        log_z = float(logsumexp(ch.log_w + (1.0 + rho) * log_alpha))
        if not full:
            return log_z
        g = np.exp(logsumexp(ch.log_w[None, :] + t * ch.log_p + rho * log_alpha[None, :], axis=1) - log_z)
        # rho times the covariance of a_kj / alpha_j under pi_j = alpha_j^(1+rho) / Z, centered for stability
        live = np.isfinite(log_alpha)
        pi = np.exp(ch.log_w[live] + (1.0 + rho) * log_alpha[live] - log_z)
        v = np.exp(t * ch.log_p[:, live] - log_alpha[live][None, :]) - g[:, None]
        h = rho * (v * pi[None, :]) @ v.T
    return log_z, g, h


def _simplex_qp(h: np.ndarray, c: np.ndarray, q: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Primal active-set solve of min 0.5 d'Hd + c'd with sum(d) = 0 and q + d >= 0."""
    # the minimizer is unchanged by a common scale; keep h comparable to the constraint row
    scale = float(np.max(np.diag(h)))
    h, c = h / scale, c / scale
    d = np.zeros(q.size)
    fixed = q <= 0
    for _ in range(max_iter):
        free = np.flatnonzero(~fixed)
        m = free.size
        grad = h @ d + c
        # null-space step keeps sum(p) = 0 exactly however large the step
        basis = np.vstack([np.eye(m - 1), -np.ones((1, m - 1))]) if m > 1 else np.zeros((m, 0))
        u = np.linalg.lstsq(basis.T @ h[np.ix_(free, free)] @ basis, -basis.T @ grad[free], rcond=1e-14)[0]
        p = basis @ u
        nu = float(np.mean(grad[free] + h[np.ix_(free, free)] @ p)) if m else 0.0
        slack = q[free] + d[free]
        neg = p < 0
        with np.errstate(over="ignore"):
            ratios = np.where(neg, slack / np.where(neg, -p, 1.0), np.inf)
        j = int(np.argmin(ratios)) if m else 0
        if m == 0 or ratios[j] >= 1.0:
            # full step reaches the minimizer on this face; check the fixed bounds
            d[free] += p
            lam = h @ d + c - nu
            lam[~fixed] = np.inf
            worst = int(np.argmin(lam))
            if lam[worst] >= -1e-14 * max(1.0, abs(nu)):
                return d
            fixed[worst] = False
            continue
        d[free] += ratios[j] * p
        d[free[j]] = -q[free[j]]
        fixed[free[j]] = True
    return d


def q_tolerance(rho: float) -> float:
    """KKT tolerance for optimal_q; at large rho the residual itself carries about (1+rho) eps of noise."""
    return max(Q_TOL, 1e3 * np.finfo(float).eps * (1.0 + rho))


def _active_set_newton(ch, rho, q, max_iter=200):
    """Projected Newton: each step solves the local quadratic model on the simplex."""
    tol = q_tolerance(rho)
    q = np.where(q > 1e-9, q, 0.0)
    q /= q.sum()
    for it in range(1, max_iter + 1):
        if kkt_residual(ch, rho, q) < tol:
            return q, it
        phi, g, h = _newton_parts(ch, rho, q)
        # -I(q) is linear along null directions of h; the ridge sends those steps to the boundary
        h = h + Q_RIDGE * max(float(np.max(np.diag(h))), 1e-150) * np.eye(q.size)
        d = _simplex_qp(h, g, q)

        def along(t):
            cand = np.maximum(q + t * d, 0.0)
            return cand / cand.sum()

        cand = along(1.0)
        # near the optimum the decrease drops below rounding noise
        if _newton_parts(ch, rho, cand, full=False) > phi + 1e-13 * max(1.0, abs(phi)):
            # the quadratic model is poor here; the objective is convex on the segment
            res = minimize_scalar(lambda t: _newton_parts(ch, rho, along(t), full=False), bounds=(0.0, 1.0),
                                  method="bounded", options={"xatol": 1e-14, "maxiter": 200})
            cand = along(float(res.x))
            if not res.fun <= phi:
                cand = q
        if np.array_equal(cand, q):
            break
        q = cand
    residual = kkt_residual(ch, rho, q)
    if residual < tol:
        return q, max_iter
    raise OptimizerError(f"optimal_q did not converge at rho={rho}", residual, max_iter)


def optimal_q(ch: MemorylessChannel, rho: float) -> InputDistribution:
    """Input distribution maximizing E_0(rho, q).

    Symmetric channels short-circuit to the uniform distribution. Otherwise
    projected Newton steps on the convex objective, each solving the local
    quadratic model over the simplex, run from the uniform distribution until
    the optimality conditions hold to q_tolerance(rho).
    """
    if rho < 0:
        raise ValueError("rho must be non-negative")
    if ch.symmetric or ch.num_inputs == 1:
        return ch.uniform_input()
    key = ("q", float(rho))
    hit = ch._memo.get(key)
    if hit is not None:
        return hit
    start = np.full(ch.num_inputs, 1.0 / ch.num_inputs)
    q, _ = _active_set_newton(ch, 0.0 if rho < 1e-8 else rho, start, Q_MAX_ITER)
    result = InputDistribution(q / q.sum())
    ch._memo[key] = result
    return result


def e0_opt(ch: MemorylessChannel, rho: float) -> float:
    """E_0(rho) = max_q E_0(rho, q)."""
    if rho == 0:
        return 0.0
    return e0(ch, rho, optimal_q(ch, rho))


def capacity(ch: MemorylessChannel) -> float:
    """Channel capacity in nats per use (mutual information at the optimal input)."""
    key = ("capacity",)
    if key in ch._memo:
        return ch._memo[key]
    q = optimal_q(ch, 0.0).q
    value = float(np.dot(q, _divergences(ch, q)))
    ch._memo[key] = value
    return value


def mutual_information(ch: MemorylessChannel, q) -> float:
    q = _check_q(ch, q).q
    return float(np.dot(q, _divergences(ch, q)))


def _maximize_rho(ch, rate, rho_hi_cap):
    """Maximize E_0(rho) - rho*rate over [0, rho_hi_cap] (concave objective)."""
    def neg(rho):
        return -(e0_opt(ch, rho) - rho * rate)

    res = minimize_scalar(neg, bounds=(0.0, rho_hi_cap), method="bounded",
                          options={"xatol": 1e-11, "maxiter": 500})
    rho = float(res.x)
    best = -float(res.fun)
    # bounded Brent never evaluates the endpoints themselves
    for edge in (0.0, rho_hi_cap):
        val = -neg(edge)
        if val > best:
            rho, best = edge, val
    return rho, best


def esp(ch: MemorylessChannel, rate: float) -> ExponentValue:
    """Sphere-packing exponent sup_{rho >= 0} (E_0(rho) - rho R)."""
    if not rate > 0:
        raise ValueError("rate must be positive")
    if rate >= capacity(ch):
        return ExponentValue(0.0, 0.0, optimal_q(ch, 0.0))

    def g(rho):
        return e0_opt(ch, rho) - rho * rate

    hi = 1.0
    while g(2 * hi) > g(hi):
        hi *= 2
        if hi >= RHO_DIVERGE:
            if g(hi + 1.0) > g(hi):
                return ExponentValue(math.inf, math.inf, None)
            break
    rho, value = _maximize_rho(ch, rate, 2 * hi)
    return ExponentValue(max(value, 0.0), rho, optimal_q(ch, rho))


def random_coding_exponent(ch: MemorylessChannel, rate: float) -> ExponentValue:
    """Random-coding exponent E_r(R) = max_{0 <= rho <= 1} (E_0(rho) - rho R)."""
    if not rate > 0:
        raise ValueError("rate must be positive")
    if rate >= capacity(ch):
        return ExponentValue(0.0, 0.0, optimal_q(ch, 0.0))
    rho, value = _maximize_rho(ch, rate, 1.0)
    return ExponentValue(max(value, 0.0), rho, optimal_q(ch, rho))


def random_coding_bound(ch: MemorylessChannel, spec: CodeSpec | int, rate: float | None = None) -> BoundResult:
    """Random-coding upper bound ln P_e <= -N E_r(R)."""
    if not isinstance(spec, CodeSpec):
        spec = CodeSpec(int(spec), float(rate))
    ex = random_coding_exponent(ch, spec.rate_nats)
    return BoundResult(
        log_pe=0.0 - spec.n * ex.value,
        kind="random_coding",
        params={"rho": ex.optimizer_rho},
        diagnostics={"exponent": ex.value},
        lower=False,
    )


def _clamp_s(s: float) -> float:
    if not 0.0 < s < 1.0:
        raise ValueError(f"s={s!r} outside (0, 1)")
    return min(max(s, S_MIN), S_MAX)


def tilted_measure(ch: MemorylessChannel, s: float) -> TiltedMeasure:
    """f_s(j) proportional to alpha_{j,s}^{1/(1-s)} with alpha built from q_s."""
    s = _clamp_s(s)
    q = optimal_q(ch, s / (1.0 - s))
    if np.any(q.q <= 0):
        raise SupportConditionError(f"q_s has zero components at s={s}: {q}")
    log_alpha = _log_alpha(ch, q.log_q, 1.0 - s)
    log_f = log_alpha / (1.0 - s)
    with np.errstate(invalid="ignore"):
        log_f = log_f - logsumexp(log_f + ch.log_w)
    return TiltedMeasure(log_f, ch.log_w, s)


def mu_fixed(ch: MemorylessChannel, s: float, log_f: np.ndarray) -> np.ndarray:
    """mu_k(s, f) = ln sum_j P(j|k)^{1-s} f(j)^s for a fixed measure f."""
    with np.errstate(invalid="ignore"):
        return logsumexp(ch.log_w[None, :] + (1.0 - s) * ch.log_p + s * log_f[None, :], axis=1)


def mu0_with_derivatives(ch: MemorylessChannel, s: float, check_spread: bool = True) -> MuTriple:
    """mu_0(s, f_s) with first and second s-derivatives at fixed f = f_s.

    The derivatives are the mean and variance of ln(f_s/P) under the tilted
    measure P^{1-s} f_s^s / exp(mu_k), computed analytically.
    """
    s = _clamp_s(s)
    key = ("mu", s)
    hit = ch._memo.get(key)
    if hit is not None:
        return hit
    tm = tilted_measure(ch, s)
    log_f = tm.log_f
    with np.errstate(invalid="ignore"):
        log_t = ch.log_w[None, :] + (1.0 - s) * ch.log_p + s * log_f[None, :]
    mu_k = logsumexp(log_t, axis=1)
    weights = np.exp(log_t - mu_k[:, None])
    finite = np.isfinite(ch.log_p)
    llr = np.where(finite, log_f[None, :] - np.where(finite, ch.log_p, 0.0), 0.0)
    m1 = np.sum(weights * llr, axis=1)
    m2 = np.sum(weights * (llr - m1[:, None]) ** 2, axis=1)
    q = optimal_q(ch, s / (1.0 - s)).q
    out = MuTriple(
        s=s,
        mu0=float(np.dot(q, mu_k)),
        mu0_prime=float(np.dot(q, m1)),
        mu0_second=float(np.dot(q, m2)),
        mu_k=mu_k,
        mu_k_prime=m1,
        mu_k_second=m2,
        log_z=float(np.dot(q, mu_k)) / (1.0 - s),
    )
    if check_spread and out.spread > SPREAD_TOL:
        raise SupportConditionError(f"mu_k depends on k at s={s} (spread {out.spread:.3e})")
    ch._memo[key] = out
    return out


@dataclass(frozen=True)
class SupportReport:
    passed: bool
    min_component: float
    worst_s: float
    s_grid: np.ndarray = field(repr=False)


def support_condition(ch: MemorylessChannel, points: int = 99) -> SupportReport:
    """Check that q_s has full support on an s-grid in (0, 1)."""
    grid = np.arange(1, points + 1) / (points + 1)
    if ch.symmetric or ch.num_inputs == 1:
        return SupportReport(True, 1.0 / ch.num_inputs, float(grid[0]), grid)
    worst, worst_s = 1.0, float(grid[0])
    for s in grid:
        m = float(optimal_q(ch, s / (1 - s)).q.min())
        if m < worst:
            worst, worst_s = m, float(s)
    return SupportReport(worst > SUPPORT_FLOOR, worst, worst_s, grid)
