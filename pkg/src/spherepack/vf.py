"""Fixed-composition (VF) refinement of the 1967 sphere-packing bound.

Finite input alphabets only: the bound passes through the largest
fixed-composition subcode, which costs ln C(N+K-1, K-1)/N in rate.
The expurgation constant is ln 8 (the rate loss from discarding half the
codewords is accounted for); ``original_constant=True`` restores ln 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .channel import InputDistribution, MemorylessChannel
from .exponents import S_MIN, e0_opt, optimal_q
from .results import BoundResult, CodeSpec, vacuous
from ._xopt import RootInfo, log_two_minus, minimize_over_x, solve_s

LN4 = math.log(4.0)
LN8 = math.log(8.0)
O1_EXPURGATION_CONST = LN8


@dataclass(frozen=True)
class VfTerms:
    rho: float
    log_beta: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    q_rho: InputDistribution

    @property
    def mean_nu1(self) -> float:
        return float(np.dot(self.q_rho.q, self.nu1))

    @property
    def mean_nu2(self) -> float:
        return float(np.dot(self.q_rho.q, self.nu2))


def vf_terms(ch: MemorylessChannel, rho: float) -> VfTerms:
    """beta_{j,k,rho} and the tilted mean/variance of ln(beta/P) per input letter."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    key = ("vf", float(rho))
    hit = ch._memo.get(key)
    if hit is not None:
        return hit
    q = optimal_q(ch, rho)
    t = 1.0 / (1.0 + rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_inner = logsumexp(t * ch.log_p + q.log_q[:, None], axis=0)
        log_beta = t * ch.log_p + rho * log_inner[None, :]
    finite = np.isfinite(ch.log_p)
    log_ratio = np.where(finite, log_beta - np.where(finite, ch.log_p, 0.0), 0.0)
    lw = np.where(finite, log_beta + ch.log_w[None, :], -np.inf)
    norm = logsumexp(lw, axis=1)
    w = np.exp(lw - norm[:, None])
    nu1 = np.sum(w * log_ratio, axis=1)
    nu2 = np.sum(w * (log_ratio - nu1[:, None]) ** 2, axis=1)
    bad = ~np.isfinite(nu1) | ~np.isfinite(nu2)
    if np.any(bad):
        raise FloatingPointError(f"non-finite VF term for input letter {int(np.flatnonzero(bad)[0])} at rho={rho}")
    out = VfTerms(float(rho), log_beta, nu1, nu2, q)
    ch._memo[key] = out
    return out


def log_compositions(n: int, k: int) -> float:
    """ln C(n+k-1, k-1), the number of compositions of length-n words over k letters."""
    return float(gammaln(n + k) - gammaln(k) - gammaln(n + 1))


def vf_o1(spec: CodeSpec, x: float, num_inputs: int, original_constant: bool = False) -> float:
    n, a = spec.n, spec.expurgation_alpha
    const = LN4 if original_constant else LN4 + math.log(1.0 / a)
    return const / n + log_compositions(n, num_inputs) / n - log_two_minus(x) / n


def vf_o2(spec: CodeSpec, x: float, mean_nu2: float) -> float:
    n, a = spec.n, spec.expurgation_alpha
    return x * math.sqrt(8.0 / n * mean_nu2) + (LN4 + math.log(1.0 / (1.0 - a))) / n - log_two_minus(x) / n


def _terms(ch, n):
    def terms(s):
        rho = s / (1.0 - s)
        vt = vf_terms(ch, rho)
        return -vt.mean_nu1 / rho, math.sqrt(2.0 / n * vt.mean_nu2) / rho
    return terms


def _exponent(ch, spec, x, k, original_constant) -> tuple[float, RootInfo | None]:
    n, R = spec.n, spec.rate_nats
    o1 = vf_o1(spec, x, k, original_constant)
    if R - o1 <= 0:
        return math.inf, None
    root = solve_s(_terms(ch, n), x, R - o1)
    if root.status == "none":
        return math.inf, root
    rho = root.s / (1.0 - root.s)
    vt = vf_terms(ch, rho)
    e0 = e0_opt(ch, rho)
    if root.status == "root":
        return e0 - rho * (R - o1) + vf_o2(spec, x, vt.mean_nu2), root
    a = spec.expurgation_alpha
    pref = log_two_minus(x) - LN4 + math.log(1 - a)
    return -pref / n + e0 + vt.mean_nu1 + x * math.sqrt(2 * vt.mean_nu2 / n), root


def vf_bound(ch: MemorylessChannel, spec: CodeSpec, num_inputs: int | None = None,
             original_constant: bool = False) -> BoundResult:
    """ln P_e >= -N * inf_x {E_0(rho_x) - rho_x (R - O_1) + O_2} with the composition-count back-off."""
    k = ch.num_inputs if num_inputs is None else int(num_inputs)
    if k < 1:
        raise ValueError("input alphabet size must be finite and positive")
    opt = minimize_over_x(lambda x: _exponent(ch, spec, x, k, original_constant))
    if not math.isfinite(opt.exponent):
        return vacuous("vf", "implicit equation for rho_x has no root for any x", n=spec.n)
    s = max(opt.root.s, S_MIN)
    log_pe = -spec.n * opt.exponent
    diag = {
        "n": spec.n,
        "exponent": opt.exponent,
        "root_status": opt.root.status,
        "residual": opt.root.residual,
        "x_interior": opt.interior,
        "x_evaluations": opt.evaluations,
        "asymmetric_caveat": not ch.symmetric,
        "clipped": log_pe > 0,
    }
    return BoundResult(min(log_pe, 0.0), "vf", {"x": opt.x, "s": s, "rho": s / (1 - s)}, diag)
