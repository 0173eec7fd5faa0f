"""Machinery shared by the VF and ISP bounds.

Both bounds choose s (equivalently rho = s/(1-s)) per value of the free
parameter x from an implicit equation of the form

    A(s) + x * B(s) = R - O_1(x)

and then minimize the resulting exponent over x > sqrt(2)/2. ``A`` and ``B``
depend only on the channel, so they are memoized on a fixed pre-scan grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .exponents import S_MAX, S_MIN

SQRT_HALF = math.sqrt(0.5)
PRESCAN = 32
T_LO, T_HI = -12.0, 6.0
_PENALTY = 1e300

# logit-spaced so both the near-capacity (small s) and low-rate ends are sampled
_LOGIT = np.linspace(math.log(S_MIN / (1 - S_MIN)), math.log(S_MAX / (1 - S_MAX)), PRESCAN)
PRESCAN_S = 1.0 / (1.0 + np.exp(-_LOGIT))


def x_of_t(t: float) -> float:
    return SQRT_HALF + math.exp(t)


def log_two_minus(x: float) -> float:
    """ln(2 - 1/x^2)."""
    return math.log(2.0) + math.log1p(-0.5 / (x * x))


@dataclass
class RootInfo:
    s: float
    residual: float
    status: str  # "root", "clamped" (equation has no root but any small s is admissible), "none"
    evaluations: int


def solve_s(terms: Callable[[float], tuple[float, float]], x: float, target: float) -> RootInfo:
    """First sign change of h(s) = A(s) + x B(s) - target, scanning upward in s."""
    def h(s):
        a, b = terms(s)
        return a + x * b - target

    vals = [h(s) for s in PRESCAN_S]
    if vals[0] <= 0:
        # (32) already fails at the smallest s, so the bound holds there
        return RootInfo(float(PRESCAN_S[0]), vals[0], "clamped", PRESCAN)
    for i in range(PRESCAN - 1):
        if vals[i] > 0 and vals[i + 1] <= 0:
            lo, hi = float(PRESCAN_S[i]), float(PRESCAN_S[i + 1])
            if vals[i + 1] == 0:
                return RootInfo(hi, 0.0, "root", PRESCAN)
            count = [0]

            def hc(s):
                count[0] += 1
                return h(s)

            s = brentq(hc, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            res = h(s)
            return RootInfo(float(s), float(res), "root", PRESCAN + count[0] + 1)
    return RootInfo(math.nan, math.nan, "none", PRESCAN)


@dataclass
class XOptimum:
    x: float
    exponent: float
    root: RootInfo | None
    interior: bool
    evaluations: int


def minimize_over_x(exponent_at: Callable[[float], tuple[float, RootInfo | None]]) -> XOptimum:
    """Minimize exponent_at(x) over x = sqrt(2)/2 + e^t, t in [T_LO, T_HI].

    Returns the best point seen; ``interior`` is False when the optimum sits
    at an end of the t-interval.
    """
    best = {"val": math.inf, "x": math.nan, "root": None}
    count = [0]

    def f(t):
        count[0] += 1
        x = x_of_t(t)
        val, root = exponent_at(x)
        if val < best["val"]:
            best.update(val=val, x=x, root=root)
        return val if math.isfinite(val) else _PENALTY

    res = minimize_scalar(f, bounds=(T_LO, T_HI), method="bounded", options={"xatol": 1e-7, "maxiter": 200})
    t_star = float(res.x)
    interior = (t_star - T_LO) > 1e-3 and (T_HI - t_star) > 1e-3
    return XOptimum(best["x"], best["val"], best["root"], interior, count[0])
