"""Two-measure bounds on pairwise error probabilities.

For a pair of measures P1, P2 on a common finite space and any split of the
space into two decision regions, at least one of the two conditional error
probabilities exceeds the corresponding lower bound returned here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class PairMu:
    s: float
    mu: float
    mu_prime: float
    mu_second: float


@dataclass(frozen=True)
class PairwiseBounds:
    s: float
    x: float
    log_lower_1: float
    log_lower_2: float
    log_upper_1: float
    log_upper_2: float
    mu: float
    mu_prime: float
    mu_second: float


def _as_measure(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("measure must be a non-negative finite vector")
    return p


def mu_pair(P1, P2, s: float) -> PairMu:
    """mu(s) = ln sum_y P1^{1-s} P2^s and its first two derivatives in s."""
    P1, P2 = _as_measure(P1), _as_measure(P2)
    if P1.shape != P2.shape:
        raise ValueError("measures must live on the same space")
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    common = (P1 > 0) & (P2 > 0)
    if not np.any(common):
        raise ValueError("P1 and P2 have disjoint supports")
    l1, l2 = np.log(P1[common]), np.log(P2[common])
    log_t = (1.0 - s) * l1 + s * l2
    mu = float(logsumexp(log_t))
    w = np.exp(log_t - mu)
    llr = l2 - l1
    m1 = float(np.dot(w, llr))
    m2 = float(np.dot(w, (llr - m1) ** 2))
    return PairMu(s, mu, m1, m2)


def log_prefactor(x: float) -> float:
    """ln(1/2 - 1/(4x^2)), stable as x approaches sqrt(2)/2."""
    if not x > SQRT_HALF:
        raise ValueError(f"x={x!r} must exceed sqrt(2)/2")
    return math.log1p(-0.5 / (x * x)) - math.log(2.0)


def pairwise_lower_bounds(P1, P2, s: float, x: float = 1.0) -> PairwiseBounds:
    m = mu_pair(P1, P2, s)
    pref = log_prefactor(x)
    root = math.sqrt(2.0 * m.mu_second)
    up1, up2 = pairwise_upper_bounds(P1, P2, s, _mu=m)
    return PairwiseBounds(
        s=s,
        x=x,
        log_lower_1=pref + m.mu - s * m.mu_prime - s * x * root,
        log_lower_2=pref + m.mu + (1 - s) * m.mu_prime - (1 - s) * x * root,
        log_upper_1=up1,
        log_upper_2=up2,
        mu=m.mu,
        mu_prime=m.mu_prime,
        mu_second=m.mu_second,
    )


def pairwise_upper_bounds(P1, P2, s: float, _mu: PairMu | None = None) -> tuple[float, float]:
    """Log-domain upper bounds attained by a suitable (likelihood-threshold) pair of regions."""
    m = _mu or mu_pair(P1, P2, s)
    return m.mu - s * m.mu_prime, m.mu + (1 - s) * m.mu_prime
