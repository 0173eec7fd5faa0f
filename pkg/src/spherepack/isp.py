"""Improved sphere-packing (ISP) lower bound for memoryless channels.

Valid whenever the input distribution q_s that maximizes E_0(s/(1-s), q)
has full support for every s in (0, 1). The block-length penalty then
carries no composition-count term, which is what separates this bound from
the fixed-composition (VF) bound.
"""

from __future__ import annotations

import math

from .channel import MemorylessChannel
from .exponents import SupportConditionError, mu0_with_derivatives, support_condition
from .results import BoundResult, CodeSpec, vacuous
from ._xopt import RootInfo, log_two_minus, minimize_over_x, solve_s

LN4 = math.log(4.0)

__all__ = ["isp_bound", "isp_rho_x", "isp_o1", "isp_o2", "support_condition"]


def isp_o1(spec: CodeSpec, x: float) -> float:
    """Rate back-off O_1(1/N, x); ln 8/N - ln(2 - 1/x^2)/N when alpha = 1/2."""
    n, a = spec.n, spec.expurgation_alpha
    return (LN4 + math.log(1.0 / a)) / n - log_two_minus(x) / n


def isp_o2(spec: CodeSpec, x: float, s: float, mu0_second: float) -> float:
    n, a = spec.n, spec.expurgation_alpha
    return (s * x * math.sqrt(8.0 * mu0_second / n)
            + (LN4 + math.log(1.0 / (1.0 - a))) / n - log_two_minus(x) / n)


def _terms(ch: MemorylessChannel, n: int):
    def terms(s):
        m = mu0_with_derivatives(ch, s)
        return -m.mu0 - (1 - s) * m.mu0_prime, (1 - s) * math.sqrt(2.0 * m.mu0_second / n)
    return terms


def isp_rho_x(ch: MemorylessChannel, spec: CodeSpec, x: float) -> tuple[float, float, float]:
    """Solve the implicit equation for s_x; returns (s_x, rho_x, relative residual).

    Raises ValueError when the equation has no root for this x.
    """
    target = spec.rate_nats - isp_o1(spec, x)
    if target <= 0:
        raise ValueError(f"R - O_1 = {target:.3e} <= 0 at x={x}; bound is vacuous")
    root = solve_s(_terms(ch, spec.n), x, target)
    if root.status == "none":
        raise ValueError(f"no sign change of the implicit equation at x={x}")
    s = root.s
    return s, s / (1 - s), abs(root.residual) / abs(target)


def _exponent(ch, spec, x) -> tuple[float, RootInfo | None]:
    n, R = spec.n, spec.rate_nats
    o1 = isp_o1(spec, x)
    if R - o1 <= 0:
        return math.inf, None
    root = solve_s(_terms(ch, n), x, R - o1)
    if root.status == "none":
        return math.inf, root
    s = root.s
    m = mu0_with_derivatives(ch, s)
    if root.status == "root":
        rho = s / (1 - s)
        return m.e0 - rho * (R - o1) + isp_o2(spec, x, s, m.mu0_second), root
    # the implicit equation is slack; use the pre-substitution form directly
    a = spec.expurgation_alpha
    pref = log_two_minus(x) - LN4 + math.log(1 - a)
    return -pref / n - m.mu0 + s * m.mu0_prime + s * x * math.sqrt(2 * m.mu0_second / n), root


def isp_bound(ch: MemorylessChannel, spec: CodeSpec) -> BoundResult:
    """ln P_e >= -N * inf_x {E_0(rho_x) - rho_x (R - O_1) + O_2}."""
    if not (ch.symmetric or ch.num_inputs == 1):
        report = support_condition(ch)
        if not report.passed:
            raise SupportConditionError(
                f"q_s loses full support (min component {report.min_component:.3e} at s={report.worst_s:.3f}); "
                "use the VF bound for this channel")
    # O_1 is smallest as x -> infinity
    floor = (LN4 + math.log(1 / spec.expurgation_alpha) - math.log(2.0)) / spec.n
    if spec.rate_nats <= floor:
        return vacuous("isp", "R - O_1(x) <= 0 for every admissible x", n=spec.n)
    opt = minimize_over_x(lambda x: _exponent(ch, spec, x))
    if not math.isfinite(opt.exponent):
        return vacuous("isp", "implicit equation has no root for any x", n=spec.n)
    s = opt.root.s
    log_pe = -spec.n * opt.exponent
    diag = {
        "n": spec.n,
        "exponent": opt.exponent,
        "root_status": opt.root.status,
        "residual": opt.root.residual,
        "x_interior": opt.interior,
        "x_evaluations": opt.evaluations,
        "clipped": log_pe > 0,
    }
    return BoundResult(min(log_pe, 0.0), "isp", {"x": opt.x, "s": s, "rho": s / (1 - s)}, diag)
