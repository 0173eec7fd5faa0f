"""The 1959 sphere-packing bound for equal-energy signals on the AWGN channel.

Everything is evaluated in the log domain so block lengths in the tens of
thousands do not underflow.

Geometry: n real dimensions, codewords on a sphere, unit noise variance per
dimension and signal norm sqrt(n) * A with A = sqrt(2 Es/N0) (Es per real
dimension). With M = exp(nR) codewords, the cone of half-angle theta around
a codeword whose solid angle is 1/M of the sphere gives
P_e >= Pr{received vector leaves the cone}.

The escape probability uses the split y = (sqrt(n) A + z_1) e_1 + z_perp:
the angle exceeds theta iff sqrt(n) A + z_1 < cot(theta) |z_perp|, and
|z_perp| is chi-distributed with n-1 degrees of freedom, so

    Q(theta) = E[ Phi(cot(theta) * r - sqrt(n) A) ],  r ~ chi_{n-1}.

The integrand is log-concave in r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, log_ndtr

from .quadrature import log_integrate
from .results import BoundResult

THETA_FLOOR = 1e-9


class SP59Error(ArithmeticError):
    pass


@dataclass(frozen=True)
class ConeGeometry:
    half_angle_theta: float
    n: int
    log_solid_angle_fraction: float
    residual: float = 0.0


def _log_sphere_norm(n: int) -> float:
    """ln of the integral of sin^{n-2} over [0, pi]."""
    return 0.5 * math.log(math.pi) + gammaln((n - 1) / 2) - gammaln(n / 2)


def log_solid_angle_fraction(n: int, theta: float) -> float:
    """ln(Omega_n(theta) / Omega_n(pi)), the cap fraction of half-angle theta."""
    if n < 2:
        raise ValueError("need at least 2 dimensions")
    if not 0 < theta <= math.pi:
        raise ValueError("theta must lie in (0, pi]")
    if theta == math.pi:
        return 0.0
    if n == 2:
        return math.log(theta / math.pi)
    p = n - 2

    def logf(phi):
        return p * np.log(np.sin(phi))

    if theta <= math.pi / 2:
        peak = theta
        slope = p / math.tan(theta) if theta < math.pi / 2 else 0.0
        curv = p / math.sin(theta) ** 2
        scale = min(1.0 / slope if slope > 0 else math.inf, 1.0 / math.sqrt(curv), theta)
    else:
        peak = math.pi / 2
        scale = min(1.0 / math.sqrt(p), theta - math.pi / 2 + 1e-3)
    return log_integrate(logf, 0.0, theta, peak, scale, rtol=1e-10) - _log_sphere_norm(n)


def cone_half_angle(n: int, rate_nats: float) -> ConeGeometry:
    """Half-angle theta whose cap holds exp(-n R) of the sphere's solid angle."""
    if n < 2:
        raise ValueError("need at least 2 dimensions")
    if rate_nats < 0:
        raise ValueError("rate must be non-negative")
    if rate_nats == 0:
        return ConeGeometry(math.pi, n, 0.0)
    target = -n * rate_nats

    def g(theta):
        return log_solid_angle_fraction(n, theta) - target

    if g(THETA_FLOOR) > 0:
        raise SP59Error(f"rate {rate_nats} too large: cone angle below {THETA_FLOOR}")
    theta = brentq(g, THETA_FLOOR, math.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=300)
    res = g(theta)
    if abs(res) > 1e-10 * max(1.0, abs(target)):
        raise SP59Error(f"cone angle residual {res:.3e} above tolerance")
    return ConeGeometry(float(theta), n, float(target + res), float(res))


def _log_chi_pdf(r, k):
    return (k - 1) * np.log(r) - 0.5 * r * r - (0.5 * k - 1) * math.log(2.0) - gammaln(0.5 * k)


def log_cone_escape(n: int, theta: float, amplitude: float) -> float:
    """ln Pr{angle between signal and received vector exceeds theta}.

    ``amplitude`` is A: per-dimension signal amplitude in noise-deviation units.
    """
    if n < 2:
        raise ValueError("need at least 2 dimensions")
    if not 0 < theta <= math.pi:
        raise ValueError("theta must lie in (0, pi]")
    if theta == math.pi:
        return -math.inf
    k = n - 1
    c = math.cos(theta) / math.sin(theta)
    delta = math.sqrt(n) * amplitude

    def logf(r):
        return _log_chi_pdf(r, k) + log_ndtr(c * r - delta)

    def dlogf(r):
        z = c * r - delta
        mills = math.exp(-0.5 * z * z - 0.5 * math.log(2 * math.pi) - float(log_ndtr(z)))
        return (k - 1) / r - r + c * mills

    lo = 1e-12
    if dlogf(lo) <= 0:
        peak = 0.0
    else:
        hi = math.sqrt(k) + abs(c) * (delta + 10.0) + 10.0
        while dlogf(hi) > 0:
            hi *= 2.0
        peak = brentq(dlogf, lo, hi, xtol=1e-13, rtol=1e-14)
    h = 1e-5 * max(1.0, peak)
    if peak > 2 * h:
        curv = -(dlogf(peak + h) - dlogf(peak - h)) / (2 * h)
    else:
        curv = -(dlogf(peak + 2 * h) - dlogf(peak + h)) / h
    scale = 1.0 / math.sqrt(max(curv, 1e-12))
    if peak == 0.0:
        scale = min(scale, 1.0 / max(abs(dlogf(1e-6)), 1e-12)) if k > 1 else scale
    upper = peak + 2000.0 * scale + 100.0
    val = log_integrate(lambda r: logf(r), 0.0, upper, peak, scale, rtol=1e-10)
    if not math.isfinite(val):
        raise SP59Error(f"cone-escape integral failed (n={n}, theta={theta})")
    return val


def sp59_bound(n: int, rate_nats: float, es_over_n0: float) -> BoundResult:
    """ln P_e >= ln Q(theta) for rate R (nats per real dimension) and Es/N0 per real dimension."""
    if not es_over_n0 > 0:
        raise ValueError("es_over_n0 must be positive")
    geom = cone_half_angle(n, rate_nats)
    amp = math.sqrt(2.0 * es_over_n0)
    log_pe = log_cone_escape(n, geom.half_angle_theta, amp)
    return BoundResult(
        min(log_pe, 0.0),
        "sp59",
        {"theta": geom.half_angle_theta},
        {"n": n, "amplitude": amp, "log_solid_angle_fraction": geom.log_solid_angle_fraction,
         "cone_residual": geom.residual},
    )
